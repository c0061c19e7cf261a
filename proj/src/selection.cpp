#include "attrgen/selection.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <stdexcept>

#include "attrgen/unicode.hpp"
#include "json_helpers.hpp"

namespace attrgen {

using nlohmann::json;

TaskSpec default_task(TaskKind kind) {
  if (kind == TaskKind::mds) return {TaskKind::mds, 200, 900};
  return {TaskKind::lfqa, 100, 200};
}

std::vector<SelectionDemo> load_selection_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open selection demos: " + path);
  std::vector<SelectionDemo> demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const json j = json::parse(line);
    SelectionDemo demo;
    demo.docs = jsonh::docset_from_json(j);
    for (const json& sj : j.at("spans")) demo.gold_spans.push_back(jsonh::span_from_json(sj));
    demos.push_back(std::move(demo));
  }
  return demos;
}

namespace {

std::string selection_instructions(const TaskSpec& task, const MarkupConfig& markup) {
  std::string s;
  if (task.kind == TaskKind::mds) {
    s += "In this task, you are presented with several documents, which need to be "
         "summarized. As an intermediate step, you need to identify salient content "
         "within the documents.";
  } else {
    s += "In this task, you are presented with a question and several documents. As an "
         "intermediate step towards answering the question, you need to identify within "
         "the documents the content that is relevant for the answer.";
  }
  s += " For each document, copy verbatim the " +
       std::string(task.kind == TaskKind::mds ? "salient" : "relevant") +
       " spans, and use " + markup.span_delim +
       " as a delimiter between each consecutive span. IMPORTANT: The output must be of "
       "the format Document [<DOC_ID>]: " + markup.span_delim +
       "-delimited consecutive " +
       std::string(task.kind == TaskKind::mds ? "salient" : "relevant") +
       " spans. IMPORTANT: Each copied content must be a single consecutive verbatim "
       "span from the corresponding passages. IMPORTANT: make sure the total number of "
       "copied words (from all documents) is around " +
       std::to_string(task.budget_avg_words) + " words, and not more than " +
       std::to_string(task.budget_max_words) + ".";
  return s;
}

std::string plain_docs_block(const DocumentSet& docs, std::size_t max_doc_words) {
  std::string out;
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "Document [" + std::to_string(i + 1) + "]: ";
    out += truncate_to_word_limit(docs.docs[i].text(), max_doc_words);
  }
  return out;
}

std::string gold_answer_block(const SelectionDemo& demo, const MarkupConfig& markup) {
  std::map<std::size_t, std::vector<std::string>> by_pos;
  for (const Span& s : demo.gold_spans) {
    const auto pos = demo.docs.doc_position(s.doc_id);
    if (!pos) throw std::runtime_error("demo span references unknown document '" + s.doc_id + "'");
    by_pos[*pos].push_back(text_of(s, demo.docs));
  }
  std::string out;
  for (const auto& [pos, surfaces] : by_pos) {
    if (!out.empty()) out += '\n';
    out += "Document [" + std::to_string(pos + 1) + "]: ";
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      if (i > 0) out += " " + markup.span_delim + " ";
      out += surfaces[i];
    }
  }
  return out;
}

std::string selection_block(const DocumentSet& docs, const SelectionOptions& opts) {
  std::string block = selection_instructions(opts.task, opts.markup);
  block += "\n\n";
  if (docs.query) block += "Question: " + *docs.query + "\n\n";
  block += plain_docs_block(docs, opts.max_doc_words);
  block += "\n\nAnswer:\n";
  return block;
}

}  // namespace

std::string build_selection_prompt(const DocumentSet& docs, const SelectionOptions& opts) {
  std::string prompt;
  const std::size_t k = opts.lm.fewshot_k < 0
                            ? 0
                            : std::min<std::size_t>(opts.demos.size(),
                                                    static_cast<std::size_t>(opts.lm.fewshot_k));
  for (std::size_t i = 0; i < k; ++i) {
    prompt += selection_block(opts.demos[i].docs, opts);
    prompt += gold_answer_block(opts.demos[i], opts.markup);
    prompt += "\n\n\n";
  }
  prompt += selection_block(docs, opts);
  return prompt;
}

std::vector<SpanCandidate> parse_selection_response(const std::string& text,
                                                    const std::string& span_delim) {
  static const std::regex kHeader(R"(Document\s*\[\s*([0-9]+)\s*\]\s*:)",
                                  std::regex::icase);
  struct Section {
    std::optional<int> hint;
    std::string body;
  };
  std::vector<Section> sections;
  std::size_t prev_end = 0;
  std::optional<int> prev_hint;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kHeader);
       it != std::sregex_iterator(); ++it) {
    sections.push_back({prev_hint, text.substr(prev_end, it->position() - prev_end)});
    prev_hint = std::stoi((*it)[1].str());
    prev_end = it->position() + it->length();
  }
  sections.push_back({prev_hint, text.substr(prev_end)});

  auto trim = [](const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    const std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };

  std::vector<SpanCandidate> candidates;
  for (const Section& section : sections) {
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = section.body.find(span_delim, pos);
      const std::string piece = next == std::string::npos
                                    ? section.body.substr(pos)
                                    : section.body.substr(pos, next - pos);
      const std::string surface = trim(piece);
      if (!surface.empty()) candidates.push_back({section.hint, surface});
      if (next == std::string::npos) break;
      pos = next + span_delim.size();
    }
  }
  return candidates;
}

SelectionResult select_content(const DocumentSet& docs, LmClient& lm,
                               const SelectionOptions& opts) {
  SelectionResult result;
  result.prompt = build_selection_prompt(docs, opts);
  result.response = lm.complete("selection", result.prompt, opts.lm);
  const std::vector<SpanCandidate> candidates =
      parse_selection_response(result.response, opts.markup.span_delim);
  LocateResult located = locate_spans(candidates, docs, opts.policy);
  result.dropped = std::move(located.dropped);
  for (const std::string& surface : result.dropped) {
    result.warnings.push_back("could not ground span: " + surface);
  }
  std::size_t words = 0;
  for (Highlight& h : located.highlights) {
    const std::size_t w = count_words(text_of(h, docs));
    if (opts.task.budget_max_words > 0 &&
        words + w > static_cast<std::size_t>(opts.task.budget_max_words)) {
      result.warnings.push_back(
          "word budget reached; keeping " + std::to_string(result.highlights.size()) +
          " of " + std::to_string(located.highlights.size()) + " highlights");
      break;
    }
    words += w;
    result.highlights.push_back(std::move(h));
  }
  return result;
}

}  // namespace attrgen
