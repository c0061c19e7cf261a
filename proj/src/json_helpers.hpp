#pragma once

#include <string>
#include <vector>

#include "attrgen/corpus.hpp"
#include "json.hpp"

// Shared JSON (de)serialization for the wire shapes used across JSONL files.
namespace attrgen::jsonh {

using nlohmann::json;

inline json span_to_json(const Span& s) {
  return json{{"doc_id", s.doc_id}, {"start", s.start}, {"end", s.end}};
}

inline Span span_from_json(const json& j) {
  Span s;
  s.doc_id = j.at("doc_id").get<std::string>();
  s.start = j.at("start").get<std::size_t>();
  s.end = j.at("end").get<std::size_t>();
  return s;
}

inline json fragments_to_json(const std::vector<Span>& fragments) {
  json arr = json::array();
  for (const Span& f : fragments) arr.push_back(json::array({f.start, f.end}));
  return arr;
}

inline json highlight_to_json(const Highlight& h) {
  return json{{"index", h.index},
              {"doc_id", h.doc_id()},
              {"fragments", fragments_to_json(h.fragments)}};
}

inline Highlight highlight_from_json(const json& j) {
  Highlight h;
  h.index = j.at("index").get<int>();
  const std::string doc_id = j.at("doc_id").get<std::string>();
  for (const json& f : j.at("fragments")) {
    h.fragments.push_back(
        Span{doc_id, f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>()});
  }
  return h;
}

inline json docset_to_json(const DocumentSet& set) {
  json docs = json::array();
  for (const Document& d : set.docs) docs.push_back(json{{"id", d.id()}, {"text", d.text()}});
  json out{{"docs", docs}};
  if (set.query) out["query"] = *set.query;
  return out;
}

inline DocumentSet docset_from_json(const json& j) {
  DocumentSet set;
  for (const json& d : j.at("docs")) {
    set.docs.emplace_back(d.at("id").get<std::string>(), d.at("text").get<std::string>());
  }
  if (j.contains("query")) set.query = j.at("query").get<std::string>();
  return set;
}

}  // namespace attrgen::jsonh
