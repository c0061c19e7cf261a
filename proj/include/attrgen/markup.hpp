#pragma once

#include <map>
#include <string>
#include <vector>

#include "attrgen/corpus.hpp"

namespace attrgen {

// The special tokens woven into prompts and fine-tuned wire formats. All six
// must be distinct and must not occur in any source document.
struct MarkupConfig {
  std::string highlight_start = "<highlight_start>";
  std::string highlight_end = "<highlight_end>";
  std::string span_delim = "<SPAN_DELIM>";
  std::string doc_sep = "<doc-sep>";
  std::string highlight_sep = "<highlight_separator>";
  std::string cluster_sep = "<cluster_separator>";

  friend bool operator==(const MarkupConfig&, const MarkupConfig&) = default;
};

void validate_markup(const MarkupConfig& cfg);
void validate_markup(const MarkupConfig& cfg, const DocumentSet& docs);

// Overlapping or touching fragment intervals coalesced, per document,
// sorted by position.
std::map<std::string, std::vector<TextSpan>> merged_fragments_by_doc(
    const std::vector<Highlight>& highlights);

// One document with the given intervals wrapped in highlight tokens. With
// truncate set, the text stops at the end of the sentence holding the last
// highlighted character; a document with no highlights truncates to nothing.
std::string render_doc_highlighted(const Document& doc, const std::vector<TextSpan>& spans,
                                   const MarkupConfig& cfg, bool truncate);

// All documents rendered and joined with the document separator.
std::string render_highlighted(const DocumentSet& docs,
                               const std::vector<Highlight>& highlights,
                               const MarkupConfig& cfg, bool truncate);

struct ParsedMarkup {
  std::string text;             // marked text with highlight tokens removed
  std::vector<TextSpan> spans;  // highlighted intervals within text
};

// Inverse of rendering for a single document's text. Throws on unbalanced
// or nested highlight tokens.
ParsedMarkup parse_highlighted(const std::string& marked, const MarkupConfig& cfg);

// Splits on the document separator first; one entry per document.
std::vector<ParsedMarkup> parse_highlighted_docs(const std::string& marked,
                                                 const MarkupConfig& cfg);

// The numbered listing quoted in prompts:
//   Document [1]:
//    1. <highlight text>
//    2. <highlight text>
// Ordinals are the highlights' own indices; documents without highlights are
// skipped.
std::string enumerate_highlights(const std::vector<Highlight>& highlights,
                                 const DocumentSet& docs);

}  // namespace attrgen
