#pragma once

#include <string>
#include <vector>

#include "attrgen/corpus.hpp"
#include "attrgen/gateway.hpp"
#include "attrgen/grounding.hpp"
#include "attrgen/markup.hpp"

namespace attrgen {

// One planned sentence: the highlight ordinals it should fuse.
struct Cluster {
  std::vector<int> highlight_ids;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

// Ordered clusters; cluster i becomes sentence i and its citation set.
struct Plan {
  std::vector<Cluster> clusters;

  friend bool operator==(const Plan&, const Plan&) = default;
};

enum class PlanMode { icl_mds, icl_lfqa, fine_tuned };

struct PlanLimits {
  int min_clusters = 0;               // 0 disables the check
  int max_highlights_per_cluster = 0; // 0 disables the check
};

PlanLimits plan_limits(PlanMode mode);

// Finds the first well-formed [{"cluster": [...]}, ...] list in free text,
// skipping prose around it. Ids outside [1, highlight_count] are dropped with
// a warning; clusters left empty are removed. Throws when no parseable list
// with at least one valid cluster exists.
Plan parse_plan(const std::string& text, int highlight_count,
                std::vector<std::string>* warnings = nullptr);

// The JSON-list wire form parse_plan reads.
std::string serialize_plan(const Plan& plan);

struct CotOutput {
  Plan plan;
  std::vector<std::string> sentences;  // one per combination line, same order
  std::string final_text;
};

// Reads chain-of-thought output: one cluster and sentence per
// "Highlights ... are combined to form sentence N: ..." line, then the text
// after the final-answer marker. Lines whose ids are all invalid are dropped
// whole. Throws when no combination line parses.
CotOutput parse_cot_output(const std::string& text, int highlight_count,
                           std::vector<std::string>* warnings = nullptr);

// Soft limit violations for the given mode, empty when compliant.
std::vector<std::string> validate_plan(const Plan& plan, PlanMode mode);

// Highlight ordinals missing from every cluster (coverage diagnostics).
std::vector<int> unclustered_highlights(const Plan& plan, int highlight_count);

struct PlanningDemo {
  DocumentSet docs;
  std::vector<Highlight> highlights;
  Plan plan;
  // Worked sentences, one per cluster. Optional; demos that carry them also
  // serve the single-call chain-of-thought prompt.
  std::vector<std::string> sentences;
};

std::vector<PlanningDemo> load_planning_demos(const std::string& path);

struct PlanningOptions {
  TaskKind task = TaskKind::mds;
  PlanMode mode = PlanMode::icl_mds;
  MarkupConfig markup;
  LMParams lm;
  std::vector<PlanningDemo> demos;
  int parse_retries = 2;
};

std::string build_planning_prompt(const DocumentSet& docs,
                                  const std::vector<Highlight>& highlights,
                                  const PlanningOptions& opts);

struct PlanningResult {
  Plan plan;
  std::vector<std::string> warnings;
  // One (prompt, response) per model call, retries included.
  std::vector<std::pair<std::string, std::string>> calls;
};

// Prompts the model for a clustering and parses it, retrying parse failures
// up to opts.parse_retries extra calls.
PlanningResult plan_sentences(const std::vector<Highlight>& highlights,
                              const DocumentSet& docs, LmClient& lm,
                              const PlanningOptions& opts);

// Fine-tuned wire format: cluster texts joined by the cluster separator;
// within a cluster, per-document groups joined by the document separator and
// same-document highlights by the highlight separator.
std::string serialize_plan_ft(const Plan& plan, const std::vector<Highlight>& highlights,
                              const DocumentSet& docs, const MarkupConfig& cfg);

// Splits that wire format back into per-cluster surface lists.
std::vector<std::vector<std::string>> parse_plan_ft(const std::string& text,
                                                    const MarkupConfig& cfg);

// Maps surface lists onto the known highlight table (exact, then folded
// comparison). Unmatched surfaces are dropped with a warning; clusters left
// empty are removed.
Plan plan_from_surfaces(const std::vector<std::vector<std::string>>& cluster_surfaces,
                        const std::vector<Highlight>& highlights, const DocumentSet& docs,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace attrgen
