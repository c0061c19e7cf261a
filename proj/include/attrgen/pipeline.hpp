#pragma once

#include <string>

#include "attrgen/config.hpp"
#include "attrgen/generator.hpp"

namespace attrgen {

enum class PipelineMode { stepwise, cot, from_gold_plan };

const char* pipeline_mode_name(PipelineMode mode);
PipelineMode pipeline_mode_from_name(std::string_view name);

// Raised when a stage fails; step names which one.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string step, const std::string& message)
      : std::runtime_error(step + ": " + message), step_(std::move(step)) {}
  const std::string& step() const { return step_; }

 private:
  std::string step_;
};

// Few-shot pools loaded once per run and shared across instances.
struct DemoPools {
  std::vector<SelectionDemo> selection;
  std::vector<PlanningDemo> planning;
  std::vector<FusionDemo> fusion;
};

DemoPools load_demo_pools(const FewshotPaths& paths);

// Runs the full flow for one instance: stepwise selects, plans, then fuses
// one sentence per cluster; cot selects and asks for clustering and sentences
// in one call, re-splitting the final text and citing clusters by position;
// from_gold_plan skips to fusion using the instance's highlights and plan.
AttributedOutput run_pipeline(const Instance& instance, LmClient& lm,
                              const RunConfig& cfg, PipelineMode mode,
                              const DemoPools& demos = {});

}  // namespace attrgen
