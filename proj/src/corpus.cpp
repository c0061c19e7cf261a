#include "attrgen/corpus.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "attrgen/unicode.hpp"
#include "json_helpers.hpp"

namespace attrgen {

const char* task_name(TaskKind kind) { return kind == TaskKind::mds ? "mds" : "lfqa"; }

TaskKind task_from_name(std::string_view name) {
  if (name == "mds") return TaskKind::mds;
  if (name == "lfqa") return TaskKind::lfqa;
  throw std::runtime_error("unknown task kind: " + std::string(name));
}

Document::Document(std::string id, std::string text)
    : id_(std::move(id)), text_(std::move(text)), chars_(to_u32(text_)) {}

std::string Document::slice(std::size_t start, std::size_t end) const {
  if (start > end || end > chars_.size()) {
    throw std::out_of_range("bad span [" + std::to_string(start) + ", " +
                            std::to_string(end) + ") in document '" + id_ +
                            "' of length " + std::to_string(chars_.size()));
  }
  return to_utf8(std::u32string_view(chars_).substr(start, end - start));
}

const Document* DocumentSet::find_doc(std::string_view doc_id) const {
  for (const Document& d : docs) {
    if (d.id() == doc_id) return &d;
  }
  return nullptr;
}

const Document& DocumentSet::doc_by_id(std::string_view doc_id) const {
  const Document* d = find_doc(doc_id);
  if (!d) throw std::runtime_error("unknown document id: " + std::string(doc_id));
  return *d;
}

std::optional<std::size_t> DocumentSet::doc_position(std::string_view doc_id) const {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].id() == doc_id) return i;
  }
  return std::nullopt;
}

namespace {

bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'?' || cp == U'!'; }

std::u32string lower_copy(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (char32_t cp : s) out.push_back(fold_case(cp));
  return out;
}

const std::unordered_set<std::u32string>& plain_abbreviations() {
  static const std::unordered_set<std::u32string> kSet = {
      U"mr",   U"mrs",  U"ms",  U"dr",   U"prof", U"sr",   U"jr",   U"st",
      U"vs",   U"etc",  U"fig", U"figs", U"no",   U"nos",  U"inc",  U"ltd",
      U"co",   U"corp", U"gen", U"col",  U"sgt",  U"lt",   U"capt", U"rev",
      U"hon",  U"sen",  U"rep", U"gov",  U"pres", U"univ", U"dept", U"est",
      U"ca",   U"cf",   U"al",  U"jan",  U"feb",  U"mar",  U"apr",  U"jun",
      U"jul",  U"aug",  U"sep", U"sept", U"oct",  U"nov",  U"dec",  U"mon",
      U"tue",  U"wed",  U"thu", U"fri",  U"sat",  U"sun"};
  return kSet;
}

const std::unordered_set<std::u32string>& dotted_abbreviations() {
  static const std::unordered_set<std::u32string> kSet = {
      U"e.g", U"i.e", U"a.m", U"p.m", U"u.s", U"u.k", U"u.n",
      U"d.c", U"ph.d", U"b.c", U"a.d", U"b.a", U"m.d"};
  return kSet;
}

// Decides whether the '.' at position dot ends an abbreviation rather than
// a sentence.
bool abbreviation_before(std::u32string_view text, std::size_t dot) {
  std::size_t t = dot;
  while (t > 0 && is_letter(text[t - 1])) --t;
  const std::size_t letters = dot - t;
  if (letters == 1 && is_upper(text[dot - 1])) return true;  // an initial
  if (letters > 0 &&
      plain_abbreviations().count(lower_copy(text.substr(t, letters))) > 0) {
    return true;
  }
  std::size_t d = dot;
  while (d > 0 && (is_letter(text[d - 1]) || text[d - 1] == U'.')) --d;
  if (d < dot && dotted_abbreviations().count(lower_copy(text.substr(d, dot - d))) > 0) {
    return true;
  }
  return false;
}

}  // namespace

std::vector<SentenceSpan> segment_sentences(std::u32string_view text) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  auto skip_ws = [&](std::size_t p) {
    while (p < n && is_space(text[p])) ++p;
    return p;
  };
  std::size_t start = skip_ws(0);
  if (start >= n) return spans;
  std::size_t j = start;
  while (j < n) {
    const char32_t c = text[j];
    if (is_terminal(c)) {
      std::size_t k = j + 1;
      while (k < n && is_closing_mark(text[k])) ++k;
      bool boundary = false;
      if (k >= n) {
        boundary = true;
      } else if (is_space(text[k])) {
        const std::size_t m = skip_ws(k);
        if (m >= n) {
          boundary = true;
        } else if (is_upper(text[m]) || is_digit(text[m]) || is_open_quote(text[m])) {
          boundary = !(c == U'.' && abbreviation_before(text, j));
        }
      }
      if (boundary) {
        spans.push_back({start, k});
        const std::size_t m = skip_ws(k);
        if (m >= n) return spans;
        start = m;
        j = m;
        continue;
      }
    }
    ++j;
  }
  std::size_t e = n;
  while (e > start && is_space(text[e - 1])) --e;
  if (e > start) spans.push_back({start, e});
  return spans;
}

std::vector<SentenceSpan> segment_sentences(std::string_view utf8) {
  return segment_sentences(std::u32string_view(to_u32(utf8)));
}

std::string truncate_to_word_limit(const std::string& text, std::size_t max_words) {
  if (max_words == 0) return text;
  const std::u32string chars = to_u32(text);
  if (count_words(chars) <= max_words) return text;
  const std::vector<SentenceSpan> sentences = segment_sentences(std::u32string_view(chars));
  std::size_t words = 0;
  std::size_t keep_end = 0;
  for (const SentenceSpan& s : sentences) {
    words += count_words(std::u32string_view(chars).substr(s.start, s.end - s.start));
    if (words > max_words) break;
    keep_end = s.end;
  }
  return to_utf8(std::u32string_view(chars).substr(0, keep_end));
}

std::string text_of(const Span& span, const DocumentSet& docs) {
  return docs.doc_by_id(span.doc_id).slice(span.start, span.end);
}

std::string text_of(const Highlight& h, const DocumentSet& docs) {
  if (h.fragments.empty()) throw std::runtime_error("highlight without fragments");
  std::string out;
  for (std::size_t i = 0; i < h.fragments.size(); ++i) {
    if (i > 0) out += ' ';
    out += text_of(h.fragments[i], docs);
  }
  return out;
}

void validate_highlight(const Highlight& h, const DocumentSet& docs) {
  if (h.fragments.empty()) throw std::runtime_error("highlight without fragments");
  const std::string& doc_id = h.fragments.front().doc_id;
  const Document& doc = docs.doc_by_id(doc_id);
  std::size_t prev_end = 0;
  bool first = true;
  for (const Span& f : h.fragments) {
    if (f.doc_id != doc_id) {
      throw std::runtime_error("highlight mixes documents '" + doc_id + "' and '" +
                               f.doc_id + "'");
    }
    if (f.start >= f.end || f.end > doc.length()) {
      throw std::runtime_error("bad fragment [" + std::to_string(f.start) + ", " +
                               std::to_string(f.end) + ") in document '" + doc_id + "'");
    }
    if (!first && f.start < prev_end) {
      throw std::runtime_error("overlapping or unordered fragments in document '" +
                               doc_id + "'");
    }
    prev_end = f.end;
    first = false;
  }
}

Instance parse_instance(const std::string& json_line) {
  const auto j = nlohmann::json::parse(json_line);
  Instance inst;
  inst.id = j.at("id").get<std::string>();
  inst.docs = jsonh::docset_from_json(j);
  if (inst.docs.docs.empty()) {
    throw std::runtime_error("instance '" + inst.id + "' has no documents");
  }
  std::unordered_set<std::string> seen;
  for (const Document& d : inst.docs.docs) {
    if (!seen.insert(d.id()).second) {
      throw std::runtime_error("instance '" + inst.id + "' repeats document id '" +
                               d.id() + "'");
    }
  }
  if (j.contains("highlights")) {
    for (const auto& hj : j.at("highlights")) {
      Highlight h = jsonh::highlight_from_json(hj);
      validate_highlight(h, inst.docs);
      inst.gold_highlights.push_back(std::move(h));
    }
  }
  if (j.contains("plan")) {
    for (const auto& cj : j.at("plan")) {
      inst.gold_plan.push_back(cj.get<std::vector<int>>());
    }
  }
  return inst;
}

std::vector<Instance> load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::vector<Instance> instances;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      instances.push_back(parse_instance(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return instances;
}

}  // namespace attrgen
