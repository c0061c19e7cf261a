#include "attrgen/generator.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "attrgen/unicode.hpp"
#include "json_helpers.hpp"

namespace attrgen {

using nlohmann::json;

std::vector<FusionDemo> load_fusion_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fusion demos: " + path);
  std::vector<FusionDemo> demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const json j = json::parse(line);
    FusionDemo demo;
    demo.docs = jsonh::docset_from_json(j);
    for (const json& hj : j.at("highlights")) {
      demo.cluster.push_back(jsonh::highlight_from_json(hj));
    }
    if (j.contains("prefix")) demo.prefix = j.at("prefix").get<std::vector<std::string>>();
    demo.target = j.at("target").get<std::string>();
    demos.push_back(std::move(demo));
  }
  return demos;
}

namespace {

constexpr const char* kNextSentenceMarker = "The next sentence is:";

std::string fusion_instructions(const FusionOptions& opts) {
  const char* output_name = opts.task == TaskKind::mds ? "summary" : "answer";
  std::string s;
  if (opts.task == TaskKind::mds) {
    s += "In this task, you are presented with several passages, where some parts are ";
  } else {
    s += "In this task, you are presented with a question and several passages, where "
         "some parts are ";
  }
  s += "\"highlighted\" (namely, there are " + opts.markup.highlight_start + " and " +
       opts.markup.highlight_end + " tokens before and after each such span).";
  if (opts.use_prefix) {
    s += " You are also presented with a prefix of the " + std::string(output_name) +
         ". Your job is to generate the next sentence of the " + output_name +
         ", that covers all and only the \"highlighted\" spans. Make sure it connects "
         "well with the prefix, and that it covers all and only the \"highlighted\" "
         "spans.";
  } else {
    s += " Your job is to generate a sentence that covers all and only the "
         "\"highlighted\" spans.";
  }
  return s;
}

std::string highlighted_docs_block(const DocumentSet& docs,
                                   const std::vector<Highlight>& highlights,
                                   const MarkupConfig& markup, bool truncate) {
  const auto by_doc = merged_fragments_by_doc(highlights);
  static const std::vector<TextSpan> kNone;
  std::string out;
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    const Document& doc = docs.docs[i];
    auto it = by_doc.find(doc.id());
    const std::vector<TextSpan>& spans = it == by_doc.end() ? kNone : it->second;
    if (i > 0) out += "\n\n";
    out += "Document [" + std::to_string(i + 1) + "]: ";
    out += render_doc_highlighted(doc, spans, markup, truncate);
  }
  return out;
}

std::string fusion_block(const DocumentSet& docs,
                         const std::vector<Highlight>& cluster_highlights,
                         const std::vector<std::string>& prefix,
                         const FusionOptions& opts) {
  std::string block = fusion_instructions(opts);
  block += "\n\n";
  if (docs.query) block += "Question: " + *docs.query + "\n\n";
  block += highlighted_docs_block(docs, cluster_highlights, opts.markup, opts.truncate_docs);
  if (opts.use_prefix) {
    block += "\n\nPrefix:\n";
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (i > 0) block += ' ';
      block += prefix[i];
    }
  }
  block += "\n\nThe highlighted spans are:\n";
  block += enumerate_highlights(cluster_highlights, docs);
  block += "\n\nAnswer:\n";
  block += kNextSentenceMarker;
  return block;
}

std::string first_sentence(const std::string& text) {
  const std::u32string chars = to_u32(text);
  const std::vector<SentenceSpan> spans = segment_sentences(std::u32string_view(chars));
  if (spans.empty()) return "";
  return to_utf8(
      std::u32string_view(chars).substr(spans[0].start, spans[0].end - spans[0].start));
}

}  // namespace

std::string build_fusion_prompt(const DocumentSet& docs,
                                const std::vector<Highlight>& cluster_highlights,
                                const std::vector<std::string>& prefix,
                                const FusionOptions& opts) {
  std::string prompt;
  const std::size_t k = opts.lm.fewshot_k < 0
                            ? 0
                            : std::min<std::size_t>(opts.demos.size(),
                                                    static_cast<std::size_t>(opts.lm.fewshot_k));
  for (std::size_t i = 0; i < k; ++i) {
    const FusionDemo& demo = opts.demos[i];
    prompt += fusion_block(demo.docs, demo.cluster, demo.prefix, opts);
    prompt += ' ';
    prompt += demo.target;
    prompt += "\n\n\n";
  }
  prompt += fusion_block(docs, cluster_highlights, prefix, opts);
  return prompt;
}

FusionResult generate_next_sentence(const std::vector<std::string>& prefix,
                                    const Cluster& cluster,
                                    const std::vector<Highlight>& highlights,
                                    const DocumentSet& docs, LmClient& lm,
                                    const FusionOptions& opts) {
  std::unordered_map<int, const Highlight*> by_id;
  for (const Highlight& h : highlights) by_id[h.index] = &h;
  std::vector<Highlight> cluster_highlights;
  for (int id : cluster.highlight_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::runtime_error("cluster references unknown highlight id " +
                               std::to_string(id));
    }
    cluster_highlights.push_back(*it->second);
  }
  if (cluster_highlights.empty()) {
    throw std::runtime_error("cannot fuse an empty cluster");
  }
  const std::string prompt = build_fusion_prompt(docs, cluster_highlights, prefix, opts);
  FusionResult result;
  const int attempts = 1 + std::max(0, opts.retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const std::string response = lm.complete("fusion", prompt, opts.lm);
    result.calls.emplace_back(prompt, response);
    std::string body = response;
    const std::size_t marker = body.find(kNextSentenceMarker);
    if (marker != std::string::npos) {
      body = body.substr(marker + std::string(kNextSentenceMarker).size());
    }
    const std::string sentence = first_sentence(body);
    if (!sentence.empty()) {
      result.sentence = sentence;
      return result;
    }
  }
  throw std::runtime_error("fusion returned no sentence after " +
                           std::to_string(attempts) + " attempts");
}

std::vector<InlineCited> parse_inline_citations(const std::string& text, int doc_count) {
  const std::u32string chars = to_u32(text);
  std::u32string stripped;
  std::vector<std::pair<std::size_t, int>> markers;  // (position in stripped, doc id)
  std::size_t i = 0;
  while (i < chars.size()) {
    if (chars[i] == U'[') {
      std::size_t j = i + 1;
      int value = 0;
      bool has_digit = false;
      while (j < chars.size() && is_digit(chars[j])) {
        value = value * 10 + static_cast<int>(chars[j] - U'0');
        has_digit = true;
        ++j;
      }
      if (has_digit && j < chars.size() && chars[j] == U']') {
        markers.emplace_back(stripped.size(), value);
        i = j + 1;
        continue;
      }
    }
    stripped.push_back(chars[i]);
    ++i;
  }
  const std::vector<SentenceSpan> spans = segment_sentences(std::u32string_view(stripped));
  std::vector<InlineCited> out;
  out.reserve(spans.size());
  for (const SentenceSpan& s : spans) {
    out.push_back({to_utf8(std::u32string_view(stripped).substr(s.start, s.end - s.start)), {}});
  }
  if (out.empty()) return out;
  for (const auto& [pos, id] : markers) {
    if (id < 1 || id > doc_count) continue;
    std::size_t target = 0;
    for (std::size_t k = 0; k < spans.size(); ++k) {
      if (spans[k].start <= pos) target = k;
    }
    std::vector<int>& ids = out[target].doc_ids;
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  return out;
}

std::string output_to_json_line(const AttributedOutput& output, const DocumentSet& docs,
                                bool include_trace) {
  std::unordered_map<int, const Highlight*> by_id;
  for (const Highlight& h : output.highlights) by_id[h.index] = &h;

  json sentences = json::array();
  for (const AttributedSentence& s : output.sentences) {
    json citations = json::array();
    for (int id : s.citations) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw std::runtime_error("sentence cites unknown highlight id " +
                                 std::to_string(id));
      }
      json c = jsonh::highlight_to_json(*it->second);
      citations.push_back(std::move(c));
    }
    sentences.push_back(json{{"text", s.text}, {"citations", std::move(citations)}});
  }
  json highlights = json::array();
  for (const Highlight& h : output.highlights) {
    json hj = jsonh::highlight_to_json(h);
    hj["text"] = text_of(h, docs);
    highlights.push_back(std::move(hj));
  }
  json j{{"id", output.instance_id},
         {"mode", output.mode},
         {"sentences", std::move(sentences)},
         {"highlights", std::move(highlights)}};
  if (!output.warnings.empty()) j["warnings"] = output.warnings;
  if (include_trace && !output.trace.empty()) {
    json trace = json::array();
    for (const TraceEntry& t : output.trace) {
      trace.push_back(json{{"step", t.step}, {"prompt", t.prompt}, {"response", t.response}});
    }
    j["trace"] = std::move(trace);
  }
  return j.dump();
}

LoadedOutput output_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  LoadedOutput loaded;
  AttributedOutput& out = loaded.output;
  out.instance_id = j.value("id", "");
  out.mode = j.value("mode", "");
  for (const json& hj : j.at("highlights")) {
    out.highlights.push_back(jsonh::highlight_from_json(hj));
    loaded.highlight_texts.push_back(hj.value("text", ""));
  }
  for (const json& sj : j.at("sentences")) {
    AttributedSentence s;
    s.text = sj.at("text").get<std::string>();
    for (const json& cj : sj.at("citations")) {
      if (cj.contains("index")) {
        s.citations.push_back(cj.at("index").get<int>());
      } else {
        // Fall back to matching the citation content against the table.
        const Highlight c = jsonh::highlight_from_json(
            json{{"index", 0}, {"doc_id", cj.at("doc_id")}, {"fragments", cj.at("fragments")}});
        int found = 0;
        for (const Highlight& h : out.highlights) {
          if (h.doc_id() == c.doc_id() && h.fragments == c.fragments) {
            found = h.index;
            break;
          }
        }
        if (found == 0) throw std::runtime_error("citation matches no highlight");
        s.citations.push_back(found);
      }
    }
    out.sentences.push_back(std::move(s));
  }
  if (j.contains("warnings")) out.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("trace")) {
    for (const json& tj : j.at("trace")) {
      out.trace.push_back({tj.value("step", ""), tj.value("prompt", ""),
                           tj.value("response", "")});
    }
  }
  return loaded;
}

std::vector<LoadedOutput> load_outputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open outputs file: " + path);
  std::vector<LoadedOutput> outputs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      outputs.push_back(output_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return outputs;
}

}  // namespace attrgen
