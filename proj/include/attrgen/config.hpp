#pragma once

#include <cstdint>
#include <string>

#include "attrgen/corpus.hpp"
#include "attrgen/gateway.hpp"
#include "attrgen/grounding.hpp"
#include "attrgen/markup.hpp"
#include "attrgen/planner.hpp"
#include "attrgen/selection.hpp"

namespace attrgen {

struct StepParams {
  LMParams selection;
  LMParams planning;
  LMParams fusion;
  LMParams cot;
  LMParams end_to_end;
};

struct GeneratorOptions {
  bool use_prefix = true;
  bool truncate_docs = true;
  bool keep_trace = true;
  std::size_t max_doc_words = 0;
  int parse_retries = 2;
  int fusion_retries = 2;
};

struct BackendConfig {
  std::string lm = "scripted";  // scripted | http | echo
  std::string mock_script;      // path, scripted backend only
  std::string nli = "containment";  // containment | http
};

struct FewshotPaths {
  std::string selection;
  std::string planning;
  std::string fusion;
};

struct BootstrapConfig {
  int samples = 1000;
  int size = 150;
  std::uint64_t seed = 13;
};

struct DecoderConfig {
  int ngram_order = 3;
  int min_words_per_highlight = 3;
  int min_highlights = 30;
  int max_per_cluster = 2;
};

struct RunConfig {
  TaskSpec task;
  MarkupConfig markup;
  MatchPolicy policy;
  StepParams params;
  PlanMode plan_mode = PlanMode::icl_mds;
  GeneratorOptions gen;
  BackendConfig backend;
  FewshotPaths fewshot;
  BootstrapConfig bootstrap;
  DecoderConfig decoder;
};

// Everything keyed off the task: budgets, tuned sampling settings, plan
// limits, decoder floors.
RunConfig default_config(TaskKind kind);

// JSON object form; absent keys keep the task's defaults.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);

}  // namespace attrgen
