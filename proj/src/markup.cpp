#include "attrgen/markup.hpp"

#include <algorithm>
#include <stdexcept>

#include "attrgen/unicode.hpp"

namespace attrgen {

namespace {

std::vector<std::string> all_tokens(const MarkupConfig& cfg) {
  return {cfg.highlight_start, cfg.highlight_end, cfg.span_delim,
          cfg.doc_sep,         cfg.highlight_sep, cfg.cluster_sep};
}

}  // namespace

void validate_markup(const MarkupConfig& cfg) {
  const std::vector<std::string> tokens = all_tokens(cfg);
  for (const std::string& t : tokens) {
    if (t.empty()) throw std::runtime_error("markup token must not be empty");
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = i + 1; j < tokens.size(); ++j) {
      if (tokens[i] == tokens[j]) {
        throw std::runtime_error("markup tokens must be distinct; '" + tokens[i] +
                                 "' repeats");
      }
    }
  }
}

void validate_markup(const MarkupConfig& cfg, const DocumentSet& docs) {
  validate_markup(cfg);
  for (const Document& d : docs.docs) {
    for (const std::string& t : all_tokens(cfg)) {
      if (d.text().find(t) != std::string::npos) {
        throw std::runtime_error("markup token '" + t + "' occurs in document '" +
                                 d.id() + "'");
      }
    }
  }
}

std::map<std::string, std::vector<TextSpan>> merged_fragments_by_doc(
    const std::vector<Highlight>& highlights) {
  std::map<std::string, std::vector<TextSpan>> by_doc;
  for (const Highlight& h : highlights) {
    for (const Span& f : h.fragments) {
      if (f.start < f.end) by_doc[f.doc_id].push_back({f.start, f.end});
    }
  }
  for (auto& [id, spans] : by_doc) {
    std::sort(spans.begin(), spans.end(),
              [](const TextSpan& a, const TextSpan& b) {
                return a.start != b.start ? a.start < b.start : a.end < b.end;
              });
    std::vector<TextSpan> merged;
    for (const TextSpan& s : spans) {
      if (!merged.empty() && s.start <= merged.back().end) {
        merged.back().end = std::max(merged.back().end, s.end);
      } else {
        merged.push_back(s);
      }
    }
    spans = std::move(merged);
  }
  return by_doc;
}

std::string render_doc_highlighted(const Document& doc, const std::vector<TextSpan>& spans,
                                   const MarkupConfig& cfg, bool truncate) {
  for (const std::string& t : all_tokens(cfg)) {
    if (doc.text().find(t) != std::string::npos) {
      throw std::runtime_error("markup token '" + t + "' occurs in document '" +
                               doc.id() + "'");
    }
  }
  std::size_t limit = doc.length();
  if (truncate) {
    if (spans.empty()) {
      limit = 0;
    } else {
      const std::size_t last_end = spans.back().end;
      limit = doc.length();
      for (const SentenceSpan& sent : segment_sentences(doc.chars())) {
        if (sent.end >= last_end) {
          limit = sent.end;
          break;
        }
      }
    }
  }
  std::string out;
  std::size_t pos = 0;
  for (const TextSpan& s : spans) {
    if (s.start < pos || s.end > doc.length()) {
      throw std::runtime_error("bad highlight interval in document '" + doc.id() + "'");
    }
    out += doc.slice(pos, s.start);
    out += cfg.highlight_start;
    out += doc.slice(s.start, s.end);
    out += cfg.highlight_end;
    pos = s.end;
  }
  if (pos < limit) out += doc.slice(pos, limit);
  return out;
}

std::string render_highlighted(const DocumentSet& docs,
                               const std::vector<Highlight>& highlights,
                               const MarkupConfig& cfg, bool truncate) {
  validate_markup(cfg);
  for (const Highlight& h : highlights) validate_highlight(h, docs);
  const auto by_doc = merged_fragments_by_doc(highlights);
  static const std::vector<TextSpan> kNone;
  std::string out;
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    const Document& doc = docs.docs[i];
    auto it = by_doc.find(doc.id());
    const std::vector<TextSpan>& spans = it == by_doc.end() ? kNone : it->second;
    if (i > 0) out += cfg.doc_sep;
    out += render_doc_highlighted(doc, spans, cfg, truncate);
  }
  return out;
}

ParsedMarkup parse_highlighted(const std::string& marked, const MarkupConfig& cfg) {
  const std::u32string text = to_u32(marked);
  const std::u32string start_tok = to_u32(cfg.highlight_start);
  const std::u32string end_tok = to_u32(cfg.highlight_end);
  std::u32string plain;
  std::vector<TextSpan> spans;
  bool open = false;
  std::size_t open_at = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, start_tok.size(), start_tok) == 0) {
      if (open) throw std::runtime_error("nested highlight start token");
      open = true;
      open_at = plain.size();
      i += start_tok.size();
      continue;
    }
    if (text.compare(i, end_tok.size(), end_tok) == 0) {
      if (!open) throw std::runtime_error("highlight end token without start");
      open = false;
      spans.push_back({open_at, plain.size()});
      i += end_tok.size();
      continue;
    }
    plain.push_back(text[i]);
    ++i;
  }
  if (open) throw std::runtime_error("unterminated highlight");
  return {to_utf8(plain), std::move(spans)};
}

std::vector<ParsedMarkup> parse_highlighted_docs(const std::string& marked,
                                                 const MarkupConfig& cfg) {
  std::vector<ParsedMarkup> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = marked.find(cfg.doc_sep, pos);
    if (next == std::string::npos) {
      out.push_back(parse_highlighted(marked.substr(pos), cfg));
      break;
    }
    out.push_back(parse_highlighted(marked.substr(pos, next - pos), cfg));
    pos = next + cfg.doc_sep.size();
  }
  return out;
}

std::string enumerate_highlights(const std::vector<Highlight>& highlights,
                                 const DocumentSet& docs) {
  std::string out;
  for (std::size_t d = 0; d < docs.docs.size(); ++d) {
    const std::string& doc_id = docs.docs[d].id();
    std::vector<const Highlight*> here;
    for (const Highlight& h : highlights) {
      if (!h.fragments.empty() && h.doc_id() == doc_id) here.push_back(&h);
    }
    if (here.empty()) continue;
    std::sort(here.begin(), here.end(),
              [](const Highlight* a, const Highlight* b) { return a->index < b->index; });
    if (!out.empty()) out += '\n';
    out += "Document [" + std::to_string(d + 1) + "]:";
    for (const Highlight* h : here) {
      out += "\n " + std::to_string(h->index) + ". " + text_of(*h, docs);
    }
  }
  return out;
}

}  // namespace attrgen
