#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attrgen {

enum class TaskKind { mds, lfqa };

const char* task_name(TaskKind kind);
TaskKind task_from_name(std::string_view name);

// Immutable source text. Offsets into a document count code points and
// index chars(); slice() converts back to UTF-8.
class Document {
 public:
  Document() = default;
  Document(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  const std::u32string& chars() const { return chars_; }
  std::size_t length() const { return chars_.size(); }
  std::string slice(std::size_t start, std::size_t end) const;

 private:
  std::string id_;
  std::string text_;
  std::u32string chars_;
};

struct DocumentSet {
  std::vector<Document> docs;
  std::optional<std::string> query;  // question-answering inputs only

  const Document* find_doc(std::string_view doc_id) const;
  const Document& doc_by_id(std::string_view doc_id) const;  // throws if absent
  std::optional<std::size_t> doc_position(std::string_view doc_id) const;
};

// Half-open character interval [start, end) in one document.
struct Span {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

// One selected source region: ordered non-overlapping fragments of a single
// document, plus the 1-based ordinal it carries in prompts and plans.
struct Highlight {
  int index = 0;
  std::vector<Span> fragments;

  const std::string& doc_id() const { return fragments.front().doc_id; }
  friend bool operator==(const Highlight&, const Highlight&) = default;
};

// Half-open character interval into some text (not tied to a document).
struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const TextSpan&, const TextSpan&) = default;
};
using SentenceSpan = TextSpan;

// Rule-based sentence splitter: a boundary is [.?!] (plus trailing closing
// quotes/brackets) followed by whitespace and an uppercase letter, digit, or
// opening quote. Common abbreviations and single-letter initials do not end
// a sentence. Spans exclude surrounding whitespace; their union covers every
// non-whitespace character.
std::vector<SentenceSpan> segment_sentences(std::u32string_view text);
std::vector<SentenceSpan> segment_sentences(std::string_view utf8);

std::string text_of(const Span& span, const DocumentSet& docs);
// Fragments joined with a single space.
std::string text_of(const Highlight& h, const DocumentSet& docs);

// Drops whole sentences from the end until at most max_words words remain
// (0 means no limit). Drops the fewest sentences that satisfy the limit.
std::string truncate_to_word_limit(const std::string& text, std::size_t max_words);

// Throws on empty fragment list, unknown doc, bad offsets, mixed documents,
// or out-of-order/overlapping fragments.
void validate_highlight(const Highlight& h, const DocumentSet& docs);

// One input line of a run: documents plus optional gold plan material
// (used by the mode that skips selection and planning).
struct Instance {
  std::string id;
  DocumentSet docs;
  std::vector<Highlight> gold_highlights;
  std::vector<std::vector<int>> gold_plan;  // clusters of highlight ordinals
};

Instance parse_instance(const std::string& json_line);
std::vector<Instance> load_instances(const std::string& path);

}  // namespace attrgen
