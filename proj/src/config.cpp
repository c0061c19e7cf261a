#include "attrgen/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace attrgen {

using nlohmann::json;

namespace {

const char* plan_mode_name(PlanMode mode) {
  switch (mode) {
    case PlanMode::icl_mds: return "icl_mds";
    case PlanMode::icl_lfqa: return "icl_lfqa";
    case PlanMode::fine_tuned: return "fine_tuned";
  }
  return "icl_mds";
}

PlanMode plan_mode_from_name(const std::string& name) {
  if (name == "icl_mds") return PlanMode::icl_mds;
  if (name == "icl_lfqa") return PlanMode::icl_lfqa;
  if (name == "fine_tuned") return PlanMode::fine_tuned;
  throw std::runtime_error("unknown plan mode: " + name);
}

void read_lm_params(const json& j, LMParams& p) {
  p.temperature = j.value("temperature", p.temperature);
  p.fewshot_k = j.value("fewshot_k", p.fewshot_k);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.retries = j.value("retries", p.retries);
}

json lm_params_to_json(const LMParams& p) {
  return json{{"temperature", p.temperature},
              {"fewshot_k", p.fewshot_k},
              {"max_tokens", p.max_tokens},
              {"retries", p.retries}};
}

}  // namespace

RunConfig default_config(TaskKind kind) {
  RunConfig cfg;
  cfg.task = default_task(kind);
  cfg.params.selection = default_params(Step::selection, kind);
  cfg.params.planning = default_params(Step::planning, kind);
  cfg.params.fusion = default_params(Step::fusion, kind);
  cfg.params.cot = default_params(Step::cot, kind);
  cfg.params.end_to_end = default_params(Step::end_to_end, kind);
  cfg.plan_mode = kind == TaskKind::mds ? PlanMode::icl_mds : PlanMode::icl_lfqa;
  cfg.decoder.min_highlights = kind == TaskKind::mds ? 30 : 5;
  return cfg;
}

RunConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  const TaskKind kind = task_from_name(
      j.contains("task") ? j["task"].value("kind", "mds") : std::string("mds"));
  RunConfig cfg = default_config(kind);

  if (j.contains("task")) {
    const json& t = j["task"];
    cfg.task.budget_avg_words = t.value("budget_avg_words", cfg.task.budget_avg_words);
    cfg.task.budget_max_words = t.value("budget_max_words", cfg.task.budget_max_words);
  }
  if (j.contains("markup")) {
    const json& m = j["markup"];
    cfg.markup.highlight_start = m.value("highlight_start", cfg.markup.highlight_start);
    cfg.markup.highlight_end = m.value("highlight_end", cfg.markup.highlight_end);
    cfg.markup.span_delim = m.value("span_delim", cfg.markup.span_delim);
    cfg.markup.doc_sep = m.value("doc_sep", cfg.markup.doc_sep);
    cfg.markup.highlight_sep = m.value("highlight_sep", cfg.markup.highlight_sep);
    cfg.markup.cluster_sep = m.value("cluster_sep", cfg.markup.cluster_sep);
  }
  if (j.contains("match")) {
    const json& m = j["match"];
    if (m.contains("level")) {
      cfg.policy.level = match_level_from_name(m["level"].get<std::string>());
    }
    cfg.policy.fuzzy_threshold = m.value("fuzzy_threshold", cfg.policy.fuzzy_threshold);
  }
  if (j.contains("steps")) {
    const json& s = j["steps"];
    if (s.contains("selection")) read_lm_params(s["selection"], cfg.params.selection);
    if (s.contains("planning")) read_lm_params(s["planning"], cfg.params.planning);
    if (s.contains("fusion")) read_lm_params(s["fusion"], cfg.params.fusion);
    if (s.contains("cot")) read_lm_params(s["cot"], cfg.params.cot);
    if (s.contains("end_to_end")) read_lm_params(s["end_to_end"], cfg.params.end_to_end);
  }
  if (j.contains("plan_mode")) {
    cfg.plan_mode = plan_mode_from_name(j["plan_mode"].get<std::string>());
  }
  if (j.contains("generator")) {
    const json& g = j["generator"];
    cfg.gen.use_prefix = g.value("use_prefix", cfg.gen.use_prefix);
    cfg.gen.truncate_docs = g.value("truncate_docs", cfg.gen.truncate_docs);
    cfg.gen.keep_trace = g.value("keep_trace", cfg.gen.keep_trace);
    cfg.gen.max_doc_words = g.value("max_doc_words", cfg.gen.max_doc_words);
    cfg.gen.parse_retries = g.value("parse_retries", cfg.gen.parse_retries);
    cfg.gen.fusion_retries = g.value("fusion_retries", cfg.gen.fusion_retries);
  }
  if (j.contains("backend")) {
    const json& b = j["backend"];
    cfg.backend.lm = b.value("lm", cfg.backend.lm);
    cfg.backend.mock_script = b.value("mock_script", cfg.backend.mock_script);
    cfg.backend.nli = b.value("nli", cfg.backend.nli);
  }
  if (j.contains("fewshot")) {
    const json& f = j["fewshot"];
    cfg.fewshot.selection = f.value("selection", cfg.fewshot.selection);
    cfg.fewshot.planning = f.value("planning", cfg.fewshot.planning);
    cfg.fewshot.fusion = f.value("fusion", cfg.fewshot.fusion);
  }
  if (j.contains("bootstrap")) {
    const json& b = j["bootstrap"];
    cfg.bootstrap.samples = b.value("samples", cfg.bootstrap.samples);
    cfg.bootstrap.size = b.value("size", cfg.bootstrap.size);
    cfg.bootstrap.seed = b.value("seed", cfg.bootstrap.seed);
  }
  if (j.contains("decoder")) {
    const json& d = j["decoder"];
    cfg.decoder.ngram_order = d.value("ngram_order", cfg.decoder.ngram_order);
    cfg.decoder.min_words_per_highlight =
        d.value("min_words_per_highlight", cfg.decoder.min_words_per_highlight);
    cfg.decoder.min_highlights = d.value("min_highlights", cfg.decoder.min_highlights);
    cfg.decoder.max_per_cluster = d.value("max_per_cluster", cfg.decoder.max_per_cluster);
  }
  validate_markup(cfg.markup);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return config_from_json_text(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string config_to_json_text(const RunConfig& cfg) {
  json j;
  j["task"] = json{{"kind", task_name(cfg.task.kind)},
                   {"budget_avg_words", cfg.task.budget_avg_words},
                   {"budget_max_words", cfg.task.budget_max_words}};
  j["markup"] = json{{"highlight_start", cfg.markup.highlight_start},
                     {"highlight_end", cfg.markup.highlight_end},
                     {"span_delim", cfg.markup.span_delim},
                     {"doc_sep", cfg.markup.doc_sep},
                     {"highlight_sep", cfg.markup.highlight_sep},
                     {"cluster_sep", cfg.markup.cluster_sep}};
  j["match"] = json{{"level", match_level_name(cfg.policy.level)},
                    {"fuzzy_threshold", cfg.policy.fuzzy_threshold}};
  j["steps"] = json{{"selection", lm_params_to_json(cfg.params.selection)},
                    {"planning", lm_params_to_json(cfg.params.planning)},
                    {"fusion", lm_params_to_json(cfg.params.fusion)},
                    {"cot", lm_params_to_json(cfg.params.cot)},
                    {"end_to_end", lm_params_to_json(cfg.params.end_to_end)}};
  j["plan_mode"] = plan_mode_name(cfg.plan_mode);
  j["generator"] = json{{"use_prefix", cfg.gen.use_prefix},
                        {"truncate_docs", cfg.gen.truncate_docs},
                        {"keep_trace", cfg.gen.keep_trace},
                        {"max_doc_words", cfg.gen.max_doc_words},
                        {"parse_retries", cfg.gen.parse_retries},
                        {"fusion_retries", cfg.gen.fusion_retries}};
  j["backend"] = json{{"lm", cfg.backend.lm},
                      {"mock_script", cfg.backend.mock_script},
                      {"nli", cfg.backend.nli}};
  j["fewshot"] = json{{"selection", cfg.fewshot.selection},
                      {"planning", cfg.fewshot.planning},
                      {"fusion", cfg.fewshot.fusion}};
  j["bootstrap"] = json{{"samples", cfg.bootstrap.samples},
                        {"size", cfg.bootstrap.size},
                        {"seed", cfg.bootstrap.seed}};
  j["decoder"] = json{{"ngram_order", cfg.decoder.ngram_order},
                      {"min_words_per_highlight", cfg.decoder.min_words_per_highlight},
                      {"min_highlights", cfg.decoder.min_highlights},
                      {"max_per_cluster", cfg.decoder.max_per_cluster}};
  return j.dump(2);
}

}  // namespace attrgen
