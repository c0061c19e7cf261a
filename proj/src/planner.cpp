#include "attrgen/planner.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "attrgen/unicode.hpp"
#include "json_helpers.hpp"

namespace attrgen {

using nlohmann::json;

PlanLimits plan_limits(PlanMode mode) {
  switch (mode) {
    case PlanMode::icl_mds: return {7, 6};
    case PlanMode::icl_lfqa: return {0, 0};
    case PlanMode::fine_tuned: return {0, 2};
  }
  return {0, 0};
}

namespace {

void warn(std::vector<std::string>* warnings, std::string message) {
  if (warnings) warnings->push_back(std::move(message));
}

// Extent of the balanced bracket list starting at text[from] ('['), string
// literals respected; npos when unbalanced.
std::size_t matching_bracket(const std::string& text, std::size_t from) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = from; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      --depth;
      if (depth == 0) return i;
      if (depth < 0) return std::string::npos;
    }
  }
  return std::string::npos;
}

bool cluster_ids_from_json(const json& value, std::vector<int>& out) {
  if (!value.is_array()) return false;
  for (const json& v : value) {
    if (v.is_number_integer()) {
      out.push_back(v.get<int>());
    } else if (v.is_string()) {
      try {
        out.push_back(std::stoi(v.get<std::string>()));
      } catch (...) {
        return false;
      }
    } else {
      return false;
    }
  }
  return true;
}

// Validates ids against the highlight table, deduplicates within the
// cluster, drops what remains empty.
void append_cluster(Plan& plan, const std::vector<int>& ids, int highlight_count,
                    std::vector<std::string>* warnings) {
  Cluster cluster;
  std::unordered_set<int> seen;
  for (int id : ids) {
    if (id < 1 || id > highlight_count) {
      warn(warnings, "dropped out-of-range highlight id " + std::to_string(id));
      continue;
    }
    if (!seen.insert(id).second) {
      warn(warnings, "dropped duplicate highlight id " + std::to_string(id) +
                         " within a cluster");
      continue;
    }
    cluster.highlight_ids.push_back(id);
  }
  if (cluster.highlight_ids.empty()) {
    warn(warnings, "dropped empty cluster");
  } else {
    plan.clusters.push_back(std::move(cluster));
  }
}

}  // namespace

Plan parse_plan(const std::string& text, int highlight_count,
                std::vector<std::string>* warnings) {
  for (std::size_t pos = text.find('['); pos != std::string::npos;
       pos = text.find('[', pos + 1)) {
    const std::size_t end = matching_bracket(text, pos);
    if (end == std::string::npos) continue;
    json parsed;
    try {
      parsed = json::parse(text.substr(pos, end - pos + 1));
    } catch (...) {
      continue;
    }
    if (!parsed.is_array() || parsed.empty()) continue;
    bool shape_ok = true;
    std::vector<std::vector<int>> raw;
    for (const json& item : parsed) {
      std::vector<int> ids;
      if (!item.is_object() || !item.contains("cluster") ||
          !cluster_ids_from_json(item["cluster"], ids)) {
        shape_ok = false;
        break;
      }
      raw.push_back(std::move(ids));
    }
    if (!shape_ok) continue;
    Plan plan;
    for (const auto& ids : raw) append_cluster(plan, ids, highlight_count, warnings);
    if (!plan.clusters.empty()) return plan;
    warn(warnings, "parsed list contained no usable cluster; scanning on");
  }
  throw std::runtime_error("no parseable cluster list in model output");
}

std::string serialize_plan(const Plan& plan) {
  json arr = json::array();
  for (const Cluster& c : plan.clusters) {
    arr.push_back(json{{"cluster", c.highlight_ids}});
  }
  return arr.dump();
}

CotOutput parse_cot_output(const std::string& text, int highlight_count,
                           std::vector<std::string>* warnings) {
  static const std::regex kLine(
      R"(^\s*Highlights?\s+([0-9][0-9,\s]*?)\s*(?:is|are)\s+combined\s+to\s+form\s+sentence\s+[0-9]+\s*:\s*(.*?)\s*$)",
      std::regex::icase);
  static const std::regex kFinal(
      R"((?:So,?\s+)?the\s+final\s+(?:summary|answer|response)\s+is\s*:?\s*)",
      std::regex::icase);

  CotOutput out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    std::vector<int> ids;
    std::string token;
    std::istringstream id_stream(m[1].str());
    while (std::getline(id_stream, token, ',')) {
      try {
        ids.push_back(std::stoi(token));
      } catch (...) {
      }
    }
    const std::string sentence = m[2].str();
    if (sentence.empty()) {
      warn(warnings, "dropped combination line with empty sentence");
      continue;
    }
    Plan one;
    append_cluster(one, ids, highlight_count, warnings);
    if (one.clusters.empty()) {
      warn(warnings, "dropped combination line whose ids were all invalid");
      continue;
    }
    out.plan.clusters.push_back(std::move(one.clusters.front()));
    out.sentences.push_back(sentence);
  }
  if (out.sentences.empty()) {
    throw std::runtime_error("no combination lines in chain-of-thought output");
  }
  std::smatch m;
  if (std::regex_search(text, m, kFinal)) {
    std::string rest = m.suffix().str();
    const std::size_t b = rest.find_first_not_of(" \t\r\n");
    const std::size_t e = rest.find_last_not_of(" \t\r\n");
    out.final_text = b == std::string::npos ? "" : rest.substr(b, e - b + 1);
  }
  if (out.final_text.empty()) {
    warn(warnings, "no final-answer marker; joining stepwise sentences");
    std::string joined;
    for (std::size_t i = 0; i < out.sentences.size(); ++i) {
      if (i > 0) joined += ' ';
      joined += out.sentences[i];
    }
    out.final_text = joined;
  }
  return out;
}

std::vector<std::string> validate_plan(const Plan& plan, PlanMode mode) {
  const PlanLimits limits = plan_limits(mode);
  std::vector<std::string> violations;
  if (limits.min_clusters > 0 &&
      plan.clusters.size() < static_cast<std::size_t>(limits.min_clusters)) {
    violations.push_back("plan has " + std::to_string(plan.clusters.size()) +
                         " clusters, fewer than " + std::to_string(limits.min_clusters));
  }
  if (limits.max_highlights_per_cluster > 0) {
    for (std::size_t i = 0; i < plan.clusters.size(); ++i) {
      const std::size_t size = plan.clusters[i].highlight_ids.size();
      if (size > static_cast<std::size_t>(limits.max_highlights_per_cluster)) {
        violations.push_back("cluster " + std::to_string(i + 1) + " has " +
                             std::to_string(size) + " highlights, more than " +
                             std::to_string(limits.max_highlights_per_cluster));
      }
    }
  }
  return violations;
}

std::vector<int> unclustered_highlights(const Plan& plan, int highlight_count) {
  std::unordered_set<int> used;
  for (const Cluster& c : plan.clusters) used.insert(c.highlight_ids.begin(), c.highlight_ids.end());
  std::vector<int> missing;
  for (int id = 1; id <= highlight_count; ++id) {
    if (used.count(id) == 0) missing.push_back(id);
  }
  return missing;
}

std::vector<PlanningDemo> load_planning_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open planning demos: " + path);
  std::vector<PlanningDemo> demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const json j = json::parse(line);
    PlanningDemo demo;
    demo.docs = jsonh::docset_from_json(j);
    for (const json& hj : j.at("highlights")) {
      demo.highlights.push_back(jsonh::highlight_from_json(hj));
    }
    for (const json& cj : j.at("plan")) {
      demo.plan.clusters.push_back(Cluster{cj.get<std::vector<int>>()});
    }
    if (j.contains("sentences")) {
      demo.sentences = j.at("sentences").get<std::vector<std::string>>();
    }
    demos.push_back(std::move(demo));
  }
  return demos;
}

namespace {

std::string planning_instructions(const PlanningOptions& opts) {
  const PlanLimits limits = plan_limits(opts.mode);
  std::string s;
  if (opts.task == TaskKind::mds) {
    s += "In this task, you are presented with several passages, where some parts are "
         "\"highlighted\" (namely, there are " + opts.markup.highlight_start + " and " +
         opts.markup.highlight_end + " tokens before and after each such span). The goal "
         "is to fuse all those highlights into a single summary. As an intermediate "
         "step, you need to cluster highlights that can be merged into a sentence "
         "(namely, each cluster will be later merged into one sentence). Make sure the "
         "clusters are in the same order you would then write the corresponding summary "
         "sentences.";
  } else {
    s += "In this task, you are presented with a question and several passages, where "
         "some parts are \"highlighted\" (namely, there are " + opts.markup.highlight_start +
         " and " + opts.markup.highlight_end + " tokens before and after each such span). "
         "The goal is to answer the question based on all those highlights. As an "
         "intermediate step, you need to cluster highlights that can be merged into a "
         "sentence (namely, each cluster will be later merged into one sentence). Make "
         "sure the clusters are in the same order you would then write the corresponding "
         "answer sentences.";
  }
  if (limits.min_clusters > 0 || limits.max_highlights_per_cluster > 0) {
    s += " IMPORTANT: make sure there are";
    if (limits.min_clusters > 0) {
      s += " at least " + std::to_string(limits.min_clusters) + " clusters";
    }
    if (limits.max_highlights_per_cluster > 0) {
      if (limits.min_clusters > 0) s += ", and";
      s += " no more than " + std::to_string(limits.max_highlights_per_cluster) +
           " highlights per cluster";
    }
    s += ".";
  }
  s += " IMPORTANT: The output must be of the format [{\"cluster\": [comma-delimited "
       "highlight indices]}]";
  return s;
}

std::string docs_block(const DocumentSet& docs, const std::vector<Highlight>& highlights,
                       const MarkupConfig& markup) {
  const auto by_doc = merged_fragments_by_doc(highlights);
  static const std::vector<TextSpan> kNone;
  std::string out;
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    const Document& doc = docs.docs[i];
    auto it = by_doc.find(doc.id());
    const std::vector<TextSpan>& spans = it == by_doc.end() ? kNone : it->second;
    if (i > 0) out += "\n\n";
    out += "Document [" + std::to_string(i + 1) + "]: ";
    out += render_doc_highlighted(doc, spans, markup, /*truncate=*/true);
  }
  return out;
}

constexpr const char* kClusterAnswerMarker =
    "Answer: The highlighted spans are clustered as follows:";

std::string planning_block(const DocumentSet& docs, const std::vector<Highlight>& highlights,
                           const PlanningOptions& opts) {
  std::string block = planning_instructions(opts);
  block += "\n\n";
  if (docs.query) block += "Question: " + *docs.query + "\n\n";
  block += docs_block(docs, highlights, opts.markup);
  block += "\n\nThe highlighted spans are:\n";
  block += enumerate_highlights(highlights, docs);
  block += "\n\n";
  block += kClusterAnswerMarker;
  block += "\n";
  return block;
}

}  // namespace

std::string build_planning_prompt(const DocumentSet& docs,
                                  const std::vector<Highlight>& highlights,
                                  const PlanningOptions& opts) {
  std::string prompt;
  const std::size_t k = opts.lm.fewshot_k < 0
                            ? 0
                            : std::min<std::size_t>(opts.demos.size(),
                                                    static_cast<std::size_t>(opts.lm.fewshot_k));
  for (std::size_t i = 0; i < k; ++i) {
    const PlanningDemo& demo = opts.demos[i];
    prompt += planning_block(demo.docs, demo.highlights, opts);
    prompt += serialize_plan(demo.plan);
    prompt += "\n\n\n";
  }
  prompt += planning_block(docs, highlights, opts);
  return prompt;
}

PlanningResult plan_sentences(const std::vector<Highlight>& highlights,
                              const DocumentSet& docs, LmClient& lm,
                              const PlanningOptions& opts) {
  if (highlights.empty()) {
    throw std::runtime_error("planning requires at least one highlight");
  }
  const std::string prompt = build_planning_prompt(docs, highlights, opts);
  PlanningResult result;
  std::string last_error;
  const int attempts = 1 + std::max(0, opts.parse_retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const std::string response = lm.complete("planning", prompt, opts.lm);
    result.calls.emplace_back(prompt, response);
    try {
      result.plan = parse_plan(response, static_cast<int>(highlights.size()),
                               &result.warnings);
    } catch (const std::exception& e) {
      last_error = e.what();
      result.warnings.push_back("plan parse attempt " + std::to_string(attempt + 1) +
                                " failed: " + last_error);
      continue;
    }
    for (std::string& v : validate_plan(result.plan, opts.mode)) {
      result.warnings.push_back("plan limit: " + v);
    }
    for (int id : unclustered_highlights(result.plan, static_cast<int>(highlights.size()))) {
      result.warnings.push_back("highlight " + std::to_string(id) + " not clustered");
    }
    return result;
  }
  throw std::runtime_error("could not parse a plan after " + std::to_string(attempts) +
                           " attempts: " + last_error);
}

namespace {

std::vector<std::string> split_on(const std::string& text, const std::string& sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(sep, pos);
    if (next == std::string::npos) {
      parts.push_back(text.substr(pos));
      return parts;
    }
    parts.push_back(text.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

std::string trim_copy(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string serialize_plan_ft(const Plan& plan, const std::vector<Highlight>& highlights,
                              const DocumentSet& docs, const MarkupConfig& cfg) {
  std::unordered_map<int, const Highlight*> by_id;
  for (const Highlight& h : highlights) by_id[h.index] = &h;
  std::string out;
  for (std::size_t c = 0; c < plan.clusters.size(); ++c) {
    if (c > 0) out += cfg.cluster_sep;
    // Group the cluster's highlights by source document, set order.
    std::string cluster_text;
    bool first_group = true;
    for (const Document& doc : docs.docs) {
      std::string group;
      bool first_in_group = true;
      for (int id : plan.clusters[c].highlight_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
          throw std::runtime_error("plan references unknown highlight id " +
                                   std::to_string(id));
        }
        if (it->second->doc_id() != doc.id()) continue;
        if (!first_in_group) group += cfg.highlight_sep;
        group += text_of(*it->second, docs);
        first_in_group = false;
      }
      if (group.empty()) continue;
      if (!first_group) cluster_text += cfg.doc_sep;
      cluster_text += group;
      first_group = false;
    }
    out += cluster_text;
  }
  return out;
}

std::vector<std::vector<std::string>> parse_plan_ft(const std::string& text,
                                                    const MarkupConfig& cfg) {
  std::vector<std::vector<std::string>> clusters;
  for (const std::string& cluster_chunk : split_on(text, cfg.cluster_sep)) {
    std::vector<std::string> surfaces;
    for (const std::string& doc_chunk : split_on(cluster_chunk, cfg.doc_sep)) {
      for (const std::string& surface : split_on(doc_chunk, cfg.highlight_sep)) {
        const std::string trimmed = trim_copy(surface);
        if (!trimmed.empty()) surfaces.push_back(trimmed);
      }
    }
    if (!surfaces.empty()) clusters.push_back(std::move(surfaces));
  }
  return clusters;
}

Plan plan_from_surfaces(const std::vector<std::vector<std::string>>& cluster_surfaces,
                        const std::vector<Highlight>& highlights, const DocumentSet& docs,
                        std::vector<std::string>* warnings) {
  std::vector<std::pair<std::string, std::u32string>> table;  // (exact, folded)
  table.reserve(highlights.size());
  for (const Highlight& h : highlights) {
    const std::string exact = text_of(h, docs);
    table.emplace_back(exact, normalize_for_match(to_u32(exact)));
  }
  Plan plan;
  for (const std::vector<std::string>& surfaces : cluster_surfaces) {
    Cluster cluster;
    std::unordered_set<int> seen;
    for (const std::string& surface : surfaces) {
      int found = 0;
      for (std::size_t i = 0; i < table.size() && found == 0; ++i) {
        if (table[i].first == surface) found = highlights[i].index;
      }
      if (found == 0) {
        const std::u32string folded = normalize_for_match(to_u32(surface));
        for (std::size_t i = 0; i < table.size() && found == 0; ++i) {
          if (table[i].second == folded) found = highlights[i].index;
        }
      }
      if (found == 0) {
        warn(warnings, "no highlight matches surface '" + surface + "'");
        continue;
      }
      if (seen.insert(found).second) cluster.highlight_ids.push_back(found);
    }
    if (!cluster.highlight_ids.empty()) plan.clusters.push_back(std::move(cluster));
  }
  return plan;
}

}  // namespace attrgen
