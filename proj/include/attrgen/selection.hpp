#pragma once

#include <string>
#include <vector>

#include "attrgen/corpus.hpp"
#include "attrgen/gateway.hpp"
#include "attrgen/grounding.hpp"
#include "attrgen/markup.hpp"

namespace attrgen {

// Word budgets the selection prompt asks for and the post-pass enforces.
struct TaskSpec {
  TaskKind kind = TaskKind::mds;
  int budget_avg_words = 200;
  int budget_max_words = 900;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

TaskSpec default_task(TaskKind kind);

struct SelectionDemo {
  DocumentSet docs;
  std::vector<Span> gold_spans;
};

std::vector<SelectionDemo> load_selection_demos(const std::string& path);

struct SelectionOptions {
  TaskSpec task;
  MarkupConfig markup;
  MatchPolicy policy;
  LMParams lm;
  std::vector<SelectionDemo> demos;
  std::size_t max_doc_words = 0;  // per-document cap; 0 = no cap
};

// Demo blocks (instructions, documents, gold answer) followed by the target
// block ending in "Answer:". Oversize documents lose whole sentences from
// the end first.
std::string build_selection_prompt(const DocumentSet& docs, const SelectionOptions& opts);

// Reads "Document [k]: span <delim> span" sections; text before any header
// becomes hintless candidates. Surfaces are trimmed; empties dropped.
std::vector<SpanCandidate> parse_selection_response(const std::string& text,
                                                    const std::string& span_delim);

struct SelectionResult {
  std::vector<Highlight> highlights;
  std::vector<std::string> dropped;  // candidate surfaces that grounded nowhere
  std::vector<std::string> warnings;
  std::string prompt;
  std::string response;
};

// One model call, grounding, then the word-budget post-pass: highlights are
// kept in order while their running word total fits budget_max_words.
SelectionResult select_content(const DocumentSet& docs, LmClient& lm,
                               const SelectionOptions& opts);

}  // namespace attrgen
