#include "attrgen/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "attrgen/unicode.hpp"

namespace attrgen {

const char* match_level_name(MatchLevel level) {
  switch (level) {
    case MatchLevel::exact_only: return "exact";
    case MatchLevel::normalized: return "normalized";
    case MatchLevel::fuzzy: return "fuzzy";
  }
  return "fuzzy";
}

MatchLevel match_level_from_name(std::string_view name) {
  if (name == "exact" || name == "exact_only") return MatchLevel::exact_only;
  if (name == "normalized") return MatchLevel::normalized;
  if (name == "fuzzy") return MatchLevel::fuzzy;
  throw std::runtime_error("unknown match level: " + std::string(name));
}

namespace {

// A folded view of a text with, per folded character, the original
// code-point range it came from.
struct FoldedText {
  std::u32string text;
  std::vector<std::size_t> orig_start;
  std::vector<std::size_t> orig_end;
};

FoldedText fold_text(std::u32string_view raw) {
  FoldedText out;
  bool pending_space = false;
  std::size_t pending_from = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (is_space(raw[i])) {
      if (!pending_space) pending_from = i;
      pending_space = true;
      continue;
    }
    std::u32string folded = fold_punct(fold_case(raw[i]));
    if (folded.empty()) continue;
    if (pending_space) {
      if (!out.text.empty()) {
        out.text.push_back(U' ');
        out.orig_start.push_back(pending_from);
        out.orig_end.push_back(i);
      }
      pending_space = false;
    }
    for (char32_t cp : folded) {
      out.text.push_back(cp);
      out.orig_start.push_back(i);
      out.orig_end.push_back(i + 1);
    }
  }
  return out;
}

struct DocMatch {
  std::size_t doc_pos = 0;  // position within the DocumentSet
  std::size_t start = 0;    // code points in the original document
  std::size_t end = 0;
};

using ClaimMap = std::map<std::size_t, std::vector<std::pair<std::size_t, std::size_t>>>;

bool overlaps_claim(const ClaimMap& claims, std::size_t doc_pos, std::size_t start,
                    std::size_t end) {
  auto it = claims.find(doc_pos);
  if (it == claims.end()) return false;
  for (const auto& [s, e] : it->second) {
    if (start < e && s < end) return true;
  }
  return false;
}

// All exact occurrences of needle in one document, in document order.
void exact_occurrences(const Document& doc, std::size_t doc_pos,
                       const std::u32string& needle, std::vector<DocMatch>& out) {
  const std::u32string& hay = doc.chars();
  if (needle.empty()) return;
  std::size_t pos = hay.find(needle);
  while (pos != std::u32string::npos) {
    out.push_back({doc_pos, pos, pos + needle.size()});
    pos = hay.find(needle, pos + 1);
  }
}

void folded_occurrences(const FoldedText& doc, std::size_t doc_pos,
                        const std::u32string& needle, std::vector<DocMatch>& out) {
  if (needle.empty()) return;
  std::size_t pos = doc.text.find(needle);
  while (pos != std::u32string::npos) {
    const std::size_t last = pos + needle.size() - 1;
    out.push_back({doc_pos, doc.orig_start[pos], doc.orig_end[last]});
    pos = doc.text.find(needle, pos + 1);
  }
}

// Longest common substring between needle and the folded document; returns
// every maximal-length match as a document span.
std::size_t common_substring_matches(const FoldedText& doc, std::size_t doc_pos,
                                     const std::u32string& needle,
                                     std::vector<DocMatch>& out) {
  const std::size_t nd = doc.text.size();
  const std::size_t nc = needle.size();
  if (nd == 0 || nc == 0) return 0;
  std::vector<std::size_t> prev(nc + 1, 0), cur(nc + 1, 0);
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ends;  // (doc end, length)
  for (std::size_t i = 1; i <= nd; ++i) {
    for (std::size_t j = 1; j <= nc; ++j) {
      if (doc.text[i - 1] == needle[j - 1]) {
        cur[j] = prev[j - 1] + 1;
        if (cur[j] > best) {
          best = cur[j];
          ends.clear();
        }
        if (cur[j] == best && best > 0) ends.emplace_back(i, cur[j]);
      } else {
        cur[j] = 0;
      }
    }
    std::swap(prev, cur);
  }
  for (const auto& [end, len] : ends) {
    const std::size_t from = end - len;
    out.push_back({doc_pos, doc.orig_start[from], doc.orig_end[end - 1]});
  }
  return best;
}

std::vector<std::size_t> search_order(const DocumentSet& docs,
                                      const std::optional<int>& hint) {
  std::vector<std::size_t> order;
  if (hint && *hint >= 1 && static_cast<std::size_t>(*hint) <= docs.docs.size()) {
    order.push_back(static_cast<std::size_t>(*hint - 1));
  } else {
    for (std::size_t i = 0; i < docs.docs.size(); ++i) order.push_back(i);
  }
  return order;
}

// First match whose span is not claimed yet; falls back to the first match.
const DocMatch* pick_match(const std::vector<DocMatch>& matches, const ClaimMap& claims) {
  if (matches.empty()) return nullptr;
  for (const DocMatch& m : matches) {
    if (!overlaps_claim(claims, m.doc_pos, m.start, m.end)) return &m;
  }
  return &matches.front();
}

}  // namespace

std::u32string normalize_for_match(std::u32string_view text) {
  return fold_text(text).text;
}

LocateResult locate_spans(const std::vector<SpanCandidate>& candidates,
                          const DocumentSet& docs, const MatchPolicy& policy) {
  if (docs.docs.empty()) throw std::runtime_error("locate_spans: empty document set");
  std::vector<FoldedText> folded;
  folded.reserve(docs.docs.size());
  for (const Document& d : docs.docs) folded.push_back(fold_text(d.chars()));

  LocateResult result;
  ClaimMap claims;
  for (const SpanCandidate& cand : candidates) {
    const std::u32string raw = to_u32(cand.surface);
    std::u32string trimmed = raw;
    while (!trimmed.empty() && is_space(trimmed.front())) trimmed.erase(trimmed.begin());
    while (!trimmed.empty() && is_space(trimmed.back())) trimmed.pop_back();
    if (trimmed.empty()) {
      result.dropped.push_back(cand.surface);
      continue;
    }
    const std::vector<std::size_t> order = search_order(docs, cand.doc_hint);

    std::vector<DocMatch> matches;
    for (std::size_t pos : order) exact_occurrences(docs.docs[pos], pos, trimmed, matches);

    if (matches.empty() && policy.level != MatchLevel::exact_only) {
      const std::u32string needle = normalize_for_match(trimmed);
      if (!needle.empty()) {
        for (std::size_t pos : order) folded_occurrences(folded[pos], pos, needle, matches);
        if (matches.empty() && policy.level == MatchLevel::fuzzy) {
          std::size_t best = 0;
          std::vector<DocMatch> fuzzy;
          for (std::size_t pos : order) {
            std::vector<DocMatch> here;
            const std::size_t len = common_substring_matches(folded[pos], pos, needle, here);
            if (len > best) {
              best = len;
              fuzzy = std::move(here);
            } else if (len == best && len > 0) {
              fuzzy.insert(fuzzy.end(), here.begin(), here.end());
            }
          }
          if (best > 0 &&
              static_cast<double>(best) + 1e-9 >=
                  policy.fuzzy_threshold * static_cast<double>(needle.size())) {
            matches = std::move(fuzzy);
          }
        }
      }
    }

    const DocMatch* chosen = pick_match(matches, claims);
    if (!chosen) {
      result.dropped.push_back(cand.surface);
      continue;
    }
    Highlight h;
    h.index = static_cast<int>(result.highlights.size()) + 1;
    h.fragments.push_back(
        Span{docs.docs[chosen->doc_pos].id(), chosen->start, chosen->end});
    claims[chosen->doc_pos].emplace_back(chosen->start, chosen->end);
    result.highlights.push_back(std::move(h));
  }
  return result;
}

namespace {

using IntervalMap = std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>>;

IntervalMap merged_intervals(const std::vector<Span>& spans) {
  IntervalMap by_doc;
  for (const Span& s : spans) {
    if (s.start < s.end) by_doc[s.doc_id].emplace_back(s.start, s.end);
  }
  for (auto& [id, ivs] : by_doc) {
    std::sort(ivs.begin(), ivs.end());
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& iv : ivs) {
      if (!merged.empty() && iv.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, iv.second);
      } else {
        merged.push_back(iv);
      }
    }
    ivs = std::move(merged);
  }
  return by_doc;
}

std::size_t total_length(const IntervalMap& m) {
  std::size_t total = 0;
  for (const auto& [id, ivs] : m) {
    for (const auto& [s, e] : ivs) total += e - s;
  }
  return total;
}

std::size_t intersection_length(const IntervalMap& a, const IntervalMap& b) {
  std::size_t total = 0;
  for (const auto& [id, ivs] : a) {
    auto it = b.find(id);
    if (it == b.end()) continue;
    const auto& jvs = it->second;
    std::size_t i = 0, j = 0;
    while (i < ivs.size() && j < jvs.size()) {
      const std::size_t lo = std::max(ivs[i].first, jvs[j].first);
      const std::size_t hi = std::min(ivs[i].second, jvs[j].second);
      if (lo < hi) total += hi - lo;
      if (ivs[i].second < jvs[j].second) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return total;
}

}  // namespace

double span_iou(const std::vector<Span>& gold, const std::vector<Span>& pred) {
  const IntervalMap g = merged_intervals(gold);
  const IntervalMap p = merged_intervals(pred);
  const std::size_t gl = total_length(g);
  const std::size_t pl = total_length(p);
  if (gl == 0 && pl == 0) return 1.0;
  const std::size_t inter = intersection_length(g, p);
  const std::size_t uni = gl + pl - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double span_iou(const std::vector<Span>& gold, const std::vector<Span>& pred,
                const DocumentSet& docs) {
  auto check = [&](const std::vector<Span>& spans, const char* side) {
    for (const Span& s : spans) {
      const Document& d = docs.doc_by_id(s.doc_id);
      if (s.start > s.end || s.end > d.length()) {
        throw std::runtime_error(std::string("span_iou: bad ") + side + " span [" +
                                 std::to_string(s.start) + ", " + std::to_string(s.end) +
                                 ") in document '" + s.doc_id + "'");
      }
    }
  };
  check(gold, "gold");
  check(pred, "pred");
  return span_iou(gold, pred);
}

}  // namespace attrgen
