#include "attrgen/html_report.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "attrgen/unicode.hpp"

namespace attrgen {

std::string html_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {
    "#ffd54f", "#80deea", "#c5e1a5", "#f8bbd0", "#b39ddb",
    "#ffab91", "#9fa8da", "#e6ee9c", "#80cbc4", "#ef9a9a",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string color_class(std::size_t sentence_index) {
  return "s" + std::to_string(sentence_index % kPaletteSize);
}

struct DocMark {
  std::size_t start;
  std::size_t end;
  std::size_t sentence_index;
};

std::string render_doc(const Document& doc, std::vector<DocMark> marks) {
  std::set<std::size_t> cuts{0, doc.length()};
  for (const DocMark& m : marks) {
    cuts.insert(m.start);
    cuts.insert(m.end);
  }
  std::string out;
  auto it = cuts.begin();
  std::size_t prev = *it++;
  for (; it != cuts.end(); ++it) {
    const std::size_t cur = *it;
    std::set<std::size_t> cover;
    for (const DocMark& m : marks) {
      if (m.start < cur && prev < m.end) cover.insert(m.sentence_index);
    }
    const std::string piece = html_escape(doc.slice(prev, cur));
    if (cover.empty()) {
      out += piece;
    } else {
      out += "<mark class=\"";
      bool first = true;
      for (std::size_t si : cover) {
        if (!first) out += ' ';
        out += color_class(si);
        first = false;
      }
      out += "\">" + piece + "</mark>";
    }
    prev = cur;
  }
  return out;
}

std::string render_instance(const AttributedOutput& out, const DocumentSet& docs) {
  std::map<int, const Highlight*> table;
  for (const Highlight& h : out.highlights) table[h.index] = &h;

  std::string html = "<section class=\"instance\">\n";
  html += "<h2>" + html_escape(out.instance_id) + " <small>(" + html_escape(out.mode) +
          ")</small></h2>\n";

  std::map<std::string, std::vector<DocMark>> marks_by_doc;
  html += "<ol class=\"sentences\">\n";
  for (std::size_t si = 0; si < out.sentences.size(); ++si) {
    const AttributedSentence& sentence = out.sentences[si];
    html += "<li class=\"sentence " + color_class(si);
    if (sentence.citations.empty()) html += " no-attribution";
    html += "\">" + html_escape(sentence.text);
    if (sentence.citations.empty()) {
      html += " <span class=\"flag\">no attribution</span>";
    } else {
      html += " <span class=\"cites\">";
      for (int id : sentence.citations) {
        auto hit = table.find(id);
        if (hit == table.end()) {
          throw std::runtime_error("output '" + out.instance_id + "' sentence " +
                                   std::to_string(si + 1) + " cites highlight " +
                                   std::to_string(id) + " which it does not carry");
        }
        html += "[" + std::to_string(id) + "]";
        for (const Span& frag : hit->second->fragments) {
          marks_by_doc[frag.doc_id].push_back(DocMark{frag.start, frag.end, si});
        }
      }
      html += "</span>";
    }
    html += "</li>\n";
  }
  html += "</ol>\n";

  if (!out.warnings.empty()) {
    html += "<ul class=\"warnings\">\n";
    for (const std::string& w : out.warnings) {
      html += "<li>" + html_escape(w) + "</li>\n";
    }
    html += "</ul>\n";
  }

  for (const Document& doc : docs.docs) {
    html += "<h3>Document " + html_escape(doc.id()) + "</h3>\n<p class=\"doc\">";
    auto mit = marks_by_doc.find(doc.id());
    if (mit == marks_by_doc.end()) {
      html += html_escape(doc.text());
    } else {
      html += render_doc(doc, mit->second);
    }
    html += "</p>\n";
  }
  html += "</section>\n";
  return html;
}

}  // namespace

std::string render_html_report(const std::vector<AttributedOutput>& outputs,
                               const std::vector<DocumentSet>& doc_sets) {
  if (outputs.size() != doc_sets.size()) {
    throw std::runtime_error("outputs and document sets differ in count");
  }
  std::string html =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
      "<title>Attribution report</title>\n<style>\n"
      "body { font-family: sans-serif; margin: 2rem auto; max-width: 60rem; }\n"
      ".doc { white-space: pre-wrap; }\n"
      ".sentence.no-attribution { border-left: 3px solid #c62828; padding-left: 0.4rem; }\n"
      ".flag { color: #c62828; font-size: 0.8em; }\n"
      ".cites { color: #555; font-size: 0.8em; }\n"
      "mark { padding: 0 1px; }\n";
  for (std::size_t i = 0; i < kPaletteSize; ++i) {
    const std::string cls = color_class(i);
    html += "mark." + cls + " { background-color: " + kPalette[i] + "; }\n";
    html += "li." + cls + " { background: linear-gradient(to right, " + kPalette[i] +
            " 0.5rem, transparent 0.5rem); padding-left: 1rem; }\n";
  }
  html += "</style>\n</head>\n<body>\n<h1>Attribution report</h1>\n";
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    html += render_instance(outputs[i], doc_sets[i]);
  }
  html += "</body>\n</html>\n";
  return html;
}

}  // namespace attrgen
