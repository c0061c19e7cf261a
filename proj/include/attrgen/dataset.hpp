#pragma once

#include <string>
#include <vector>

#include "attrgen/corpus.hpp"
#include "attrgen/planner.hpp"

namespace attrgen {

// Per-statement attribution judgments from a rated long-form answer.
struct StatementSupport {
  std::vector<std::string> labels;  // one judgment per citation
  std::string union_label;          // judgment for all citations merged, may be empty
};

// True when any single citation, or the union of them, fully supports it.
bool fully_supported(const StatementSupport& support);

struct SentenceAlignment {
  int sentence_index = 0;  // 0-based position in the record's sentences
  std::vector<Span> spans;
};

// One source set with its written output and the span alignments between them.
struct AlignmentRecord {
  std::string id;
  DocumentSet docs;
  std::vector<std::string> sentences;
  std::vector<SentenceAlignment> alignments;
  std::vector<StatementSupport> support;  // per sentence; empty when unlabeled
  int utility = -1;                       // -1 when unrated
};

std::vector<AlignmentRecord> load_alignment_records(const std::string& path);

// Throws describing the first out-of-range sentence index or span.
void validate_record(const AlignmentRecord& record);

struct SelectionExample {
  std::string record_id;
  DocumentSet docs;
  std::vector<Span> spans;  // merged union of all aligned source spans
};

struct PlanningExample {
  std::string record_id;
  DocumentSet docs;
  std::vector<Highlight> highlights;   // deduplicated spans, reading order
  Plan plan;                           // one cluster per aligned sentence, in order
  std::vector<std::string> sentences;  // the sentences those clusters produce
};

struct FusionExample {
  std::string record_id;
  DocumentSet docs;
  std::vector<Highlight> cluster;      // renumbered 1..k
  std::vector<std::string> prefix;     // every earlier sentence
  std::string target;
};

struct StepDatasets {
  std::vector<SelectionExample> selection;
  std::vector<PlanningExample> planning;
  std::vector<FusionExample> fusion;
  std::vector<std::string> log;  // sentences dropped for lacking alignments, etc.
};

// Splits each record into per-step supervision: the span union for selection,
// per-sentence clusters over a shared highlight table for planning, and one
// (cluster + prefix -> sentence) pair per aligned sentence for fusion.
// Sentences with no aligned spans produce no cluster and no fusion pair.
StepDatasets derive_step_datasets(const std::vector<AlignmentRecord>& records);

// Keeps records whose statements are all fully supported and whose utility
// rating is 4 or 5; support and utility checks no-op when the record carries
// no such labels. Records whose spans do not align to their sources are
// dropped. Reasons land in *log when given.
std::vector<AlignmentRecord> filter_lfqa_records(const std::vector<AlignmentRecord>& records,
                                                 std::vector<std::string>* log = nullptr);

// Writes selection.jsonl / planning.jsonl / fusion.jsonl under dir, in the
// exact shapes the prompt builders load as demo pools.
void write_step_datasets(const StepDatasets& data, const std::string& dir);

}  // namespace attrgen
