#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attrgen/corpus.hpp"

namespace attrgen {

enum class MatchLevel { exact_only, normalized, fuzzy };

const char* match_level_name(MatchLevel level);
MatchLevel match_level_from_name(std::string_view name);

struct MatchPolicy {
  MatchLevel level = MatchLevel::fuzzy;
  // Minimum share of the candidate covered by the longest common substring
  // before a fuzzy match is accepted.
  double fuzzy_threshold = 0.9;
};

// A model-proposed source quotation. doc_hint is a 1-based document position
// (from a "Document [k]:" header); a missing or invalid hint searches all
// documents in order.
struct SpanCandidate {
  std::optional<int> doc_hint;
  std::string surface;

  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
};

struct LocateResult {
  std::vector<Highlight> highlights;  // renumbered 1..m in candidate order
  std::vector<std::string> dropped;   // surfaces that matched nowhere
};

// Grounds each candidate to a character span, trying exact search first,
// then case/whitespace/punctuation-folded search, then longest common
// substring, stopping at the level the policy allows. Repeated surfaces take
// the first occurrence not claimed by an earlier highlight.
LocateResult locate_spans(const std::vector<SpanCandidate>& candidates,
                          const DocumentSet& docs, const MatchPolicy& policy);

// Character-set intersection over union, positions keyed by document.
// Both empty -> 1.0.
double span_iou(const std::vector<Span>& gold, const std::vector<Span>& pred);
// Same, but throws when a span references a missing document or exceeds it.
double span_iou(const std::vector<Span>& gold, const std::vector<Span>& pred,
                const DocumentSet& docs);

// The folding the matcher applies at the normalized level: case fold,
// punctuation fold, whitespace runs collapsed to one space, ends trimmed.
std::u32string normalize_for_match(std::u32string_view text);

}  // namespace attrgen
