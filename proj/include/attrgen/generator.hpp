#pragma once

#include <string>
#include <vector>

#include "attrgen/corpus.hpp"
#include "attrgen/gateway.hpp"
#include "attrgen/markup.hpp"
#include "attrgen/planner.hpp"

namespace attrgen {

// One output sentence with the highlight ordinals that ground it.
struct AttributedSentence {
  std::string text;
  std::vector<int> citations;

  friend bool operator==(const AttributedSentence&, const AttributedSentence&) = default;
};

struct TraceEntry {
  std::string step;
  std::string prompt;
  std::string response;
};

struct AttributedOutput {
  std::string instance_id;
  std::string mode;  // "stepwise", "cot", or "from_gold_plan"
  std::vector<AttributedSentence> sentences;
  std::vector<Highlight> highlights;
  std::vector<std::string> warnings;
  std::vector<TraceEntry> trace;
};

struct FusionDemo {
  DocumentSet docs;
  std::vector<Highlight> cluster;
  std::vector<std::string> prefix;
  std::string target;
};

std::vector<FusionDemo> load_fusion_demos(const std::string& path);

struct FusionOptions {
  TaskKind task = TaskKind::mds;
  MarkupConfig markup;
  LMParams lm;
  std::vector<FusionDemo> demos;
  bool use_prefix = true;
  bool truncate_docs = true;
  int retries = 2;  // extra calls when the model returns an empty sentence
};

// Documents with only the cluster's highlights marked, the running prefix,
// the numbered highlight listing, and the next-sentence answer marker.
std::string build_fusion_prompt(const DocumentSet& docs,
                                const std::vector<Highlight>& cluster_highlights,
                                const std::vector<std::string>& prefix,
                                const FusionOptions& opts);

struct FusionResult {
  std::string sentence;
  // One (prompt, response) per model call, retries included.
  std::vector<std::pair<std::string, std::string>> calls;
};

// Asks for the sentence fusing one cluster, given the sentences so far.
// Takes the first sentence of the reply (text after the answer marker when
// present). Throws after retries if the reply never yields a sentence.
FusionResult generate_next_sentence(const std::vector<std::string>& prefix,
                                    const Cluster& cluster,
                                    const std::vector<Highlight>& highlights,
                                    const DocumentSet& docs, LmClient& lm,
                                    const FusionOptions& opts);

struct InlineCited {
  std::string sentence;
  std::vector<int> doc_ids;  // 1-based document ordinals

  friend bool operator==(const InlineCited&, const InlineCited&) = default;
};

// Splits baseline-style text with bracketed citation markers ("... [2]")
// into sentences, attaching each marker to the sentence it follows. Ids
// outside [1, doc_count] are dropped; repeats are deduplicated.
std::vector<InlineCited> parse_inline_citations(const std::string& text, int doc_count);

// Wire form of one output line. Citations expand each cited highlight into
// {"index", "doc_id", "fragments"}; the highlight table entries also carry
// their surface text.
std::string output_to_json_line(const AttributedOutput& output, const DocumentSet& docs,
                                bool include_trace);

// Reads the wire form back; surfaces land in highlight_texts (aligned with
// highlights) so metrics can run without the source documents.
struct LoadedOutput {
  AttributedOutput output;
  std::vector<std::string> highlight_texts;
};

LoadedOutput output_from_json_line(const std::string& line);
std::vector<LoadedOutput> load_outputs(const std::string& path);

}  // namespace attrgen
