#include "attrgen/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "json_helpers.hpp"

namespace attrgen {

using nlohmann::json;

namespace {

std::string normalize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (c == '_') {
      out += ' ';
    } else if (c >= 'A' && c <= 'Z') {
      out += static_cast<char>(c - 'A' + 'a');
    } else {
      out += c;
    }
  }
  const std::size_t b = out.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  const std::size_t e = out.find_last_not_of(' ');
  return out.substr(b, e - b + 1);
}

bool is_full(const std::string& label) {
  const std::string n = normalize_label(label);
  return n == "full support" || n == "full";
}

}  // namespace

bool fully_supported(const StatementSupport& support) {
  if (is_full(support.union_label)) return true;
  return std::any_of(support.labels.begin(), support.labels.end(), is_full);
}

std::vector<AlignmentRecord> load_alignment_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open alignment records: " + path);
  std::vector<AlignmentRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      AlignmentRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.docs = jsonh::docset_from_json(j);
      rec.sentences = j.at("sentences").get<std::vector<std::string>>();
      for (const json& aj : j.at("alignments")) {
        SentenceAlignment align;
        align.sentence_index = aj.at("sentence").get<int>();
        for (const json& sj : aj.at("spans")) align.spans.push_back(jsonh::span_from_json(sj));
        rec.alignments.push_back(std::move(align));
      }
      if (j.contains("support")) {
        for (const json& sj : j.at("support")) {
          StatementSupport sup;
          if (sj.contains("labels")) sup.labels = sj.at("labels").get<std::vector<std::string>>();
          if (sj.contains("union")) sup.union_label = sj.at("union").get<std::string>();
          rec.support.push_back(std::move(sup));
        }
      }
      if (j.contains("utility")) rec.utility = j.at("utility").get<int>();
      records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void validate_record(const AlignmentRecord& record) {
  for (const SentenceAlignment& align : record.alignments) {
    if (align.sentence_index < 0 ||
        static_cast<std::size_t>(align.sentence_index) >= record.sentences.size()) {
      throw std::runtime_error("record '" + record.id + "': alignment names sentence " +
                               std::to_string(align.sentence_index) + " of " +
                               std::to_string(record.sentences.size()));
    }
    for (const Span& span : align.spans) {
      const Document* doc = record.docs.find_doc(span.doc_id);
      if (!doc) {
        throw std::runtime_error("record '" + record.id + "': span names unknown document '" +
                                 span.doc_id + "'");
      }
      if (span.start >= span.end || span.end > doc->length()) {
        throw std::runtime_error("record '" + record.id + "': span [" +
                                 std::to_string(span.start) + ", " + std::to_string(span.end) +
                                 ") out of range for document '" + span.doc_id + "' of length " +
                                 std::to_string(doc->length()));
      }
    }
  }
}

namespace {

// (doc position, start, end) reading order.
struct SpanKey {
  std::size_t doc_pos;
  std::size_t start;
  std::size_t end;

  auto operator<=>(const SpanKey&) const = default;
};

std::vector<Span> merged_span_union(const std::vector<SentenceAlignment>& alignments,
                                    const DocumentSet& docs) {
  std::map<std::size_t, std::vector<TextSpan>> by_doc;
  for (const SentenceAlignment& align : alignments) {
    for (const Span& span : align.spans) {
      by_doc[*docs.doc_position(span.doc_id)].push_back(TextSpan{span.start, span.end});
    }
  }
  std::vector<Span> merged;
  for (auto& [doc_pos, spans] : by_doc) {
    std::sort(spans.begin(), spans.end(),
              [](const TextSpan& a, const TextSpan& b) { return a.start < b.start; });
    std::vector<TextSpan> out;
    for (const TextSpan& s : spans) {
      if (!out.empty() && s.start <= out.back().end) {
        out.back().end = std::max(out.back().end, s.end);
      } else {
        out.push_back(s);
      }
    }
    for (const TextSpan& s : out) {
      merged.push_back(Span{docs.docs[doc_pos].id(), s.start, s.end});
    }
  }
  return merged;
}

}  // namespace

StepDatasets derive_step_datasets(const std::vector<AlignmentRecord>& records) {
  StepDatasets data;
  for (const AlignmentRecord& rec : records) {
    validate_record(rec);

    SelectionExample sel;
    sel.record_id = rec.id;
    sel.docs = rec.docs;
    sel.spans = merged_span_union(rec.alignments, rec.docs);
    data.selection.push_back(std::move(sel));

    // Shared highlight table: exact spans deduplicated, numbered in reading
    // order. A span aligned to two sentences keeps one id and joins both
    // clusters.
    std::set<SpanKey> unique;
    for (const SentenceAlignment& align : rec.alignments) {
      for (const Span& span : align.spans) {
        unique.insert(SpanKey{*rec.docs.doc_position(span.doc_id), span.start, span.end});
      }
    }
    std::map<SpanKey, int> id_of;
    std::vector<Highlight> table;
    for (const SpanKey& key : unique) {
      Highlight h;
      h.index = static_cast<int>(table.size()) + 1;
      h.fragments.push_back(Span{rec.docs.docs[key.doc_pos].id(), key.start, key.end});
      id_of[key] = h.index;
      table.push_back(std::move(h));
    }

    PlanningExample plan_ex;
    plan_ex.record_id = rec.id;
    plan_ex.docs = rec.docs;
    plan_ex.highlights = table;
    for (std::size_t si = 0; si < rec.sentences.size(); ++si) {
      std::vector<int> ids;
      for (const SentenceAlignment& align : rec.alignments) {
        if (static_cast<std::size_t>(align.sentence_index) != si) continue;
        for (const Span& span : align.spans) {
          ids.push_back(id_of.at(
              SpanKey{*rec.docs.doc_position(span.doc_id), span.start, span.end}));
        }
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      if (ids.empty()) {
        data.log.push_back("record '" + rec.id + "': sentence " + std::to_string(si + 1) +
                           " has no aligned spans; no cluster or fusion pair emitted");
        continue;
      }

      FusionExample fus;
      fus.record_id = rec.id;
      fus.docs = rec.docs;
      for (int id : ids) {
        Highlight h = table[static_cast<std::size_t>(id - 1)];
        h.index = static_cast<int>(fus.cluster.size()) + 1;
        fus.cluster.push_back(std::move(h));
      }
      fus.prefix.assign(rec.sentences.begin(),
                        rec.sentences.begin() + static_cast<std::ptrdiff_t>(si));
      fus.target = rec.sentences[si];
      data.fusion.push_back(std::move(fus));

      plan_ex.plan.clusters.push_back(Cluster{std::move(ids)});
      plan_ex.sentences.push_back(rec.sentences[si]);
    }
    data.planning.push_back(std::move(plan_ex));
  }
  return data;
}

std::vector<AlignmentRecord> filter_lfqa_records(const std::vector<AlignmentRecord>& records,
                                                 std::vector<std::string>* log) {
  auto note = [log](std::string message) {
    if (log) log->push_back(std::move(message));
  };
  std::vector<AlignmentRecord> kept;
  for (const AlignmentRecord& rec : records) {
    try {
      validate_record(rec);
    } catch (const std::exception& e) {
      note(std::string("dropped: evidence does not align: ") + e.what());
      continue;
    }
    if (rec.utility >= 0 && rec.utility != 4 && rec.utility != 5) {
      note("dropped: record '" + rec.id + "' has utility " + std::to_string(rec.utility));
      continue;
    }
    if (!rec.support.empty()) {
      if (rec.support.size() != rec.sentences.size()) {
        note("dropped: record '" + rec.id + "' labels " + std::to_string(rec.support.size()) +
             " statements for " + std::to_string(rec.sentences.size()) + " sentences");
        continue;
      }
      bool all_full = true;
      for (std::size_t i = 0; i < rec.support.size(); ++i) {
        if (!fully_supported(rec.support[i])) {
          note("dropped: record '" + rec.id + "' statement " + std::to_string(i + 1) +
               " is not fully supported");
          all_full = false;
          break;
        }
      }
      if (!all_full) continue;
    }
    kept.push_back(rec);
  }
  return kept;
}

namespace {

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const json& j : lines) out << j.dump() << '\n';
}

}  // namespace

void write_step_datasets(const StepDatasets& data, const std::string& dir) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);

  std::vector<json> lines;
  for (const SelectionExample& ex : data.selection) {
    json j = jsonh::docset_to_json(ex.docs);
    j["record_id"] = ex.record_id;
    json spans = json::array();
    for (const Span& s : ex.spans) spans.push_back(jsonh::span_to_json(s));
    j["spans"] = std::move(spans);
    lines.push_back(std::move(j));
  }
  write_jsonl(base / "selection.jsonl", lines);

  lines.clear();
  for (const PlanningExample& ex : data.planning) {
    json j = jsonh::docset_to_json(ex.docs);
    j["record_id"] = ex.record_id;
    json highlights = json::array();
    for (const Highlight& h : ex.highlights) highlights.push_back(jsonh::highlight_to_json(h));
    j["highlights"] = std::move(highlights);
    json plan = json::array();
    for (const Cluster& c : ex.plan.clusters) plan.push_back(c.highlight_ids);
    j["plan"] = std::move(plan);
    j["sentences"] = ex.sentences;
    lines.push_back(std::move(j));
  }
  write_jsonl(base / "planning.jsonl", lines);

  lines.clear();
  for (const FusionExample& ex : data.fusion) {
    json j = jsonh::docset_to_json(ex.docs);
    j["record_id"] = ex.record_id;
    json highlights = json::array();
    for (const Highlight& h : ex.cluster) highlights.push_back(jsonh::highlight_to_json(h));
    j["highlights"] = std::move(highlights);
    j["prefix"] = ex.prefix;
    j["target"] = ex.target;
    lines.push_back(std::move(j));
  }
  write_jsonl(base / "fusion.jsonl", lines);
}

}  // namespace attrgen
