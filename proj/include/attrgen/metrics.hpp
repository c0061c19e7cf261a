#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attrgen/config.hpp"
#include "attrgen/corpus.hpp"
#include "attrgen/gateway.hpp"
#include "attrgen/generator.hpp"
#include "attrgen/planner.hpp"

namespace attrgen {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Case-folded whitespace tokens, the unit for ROUGE.
std::vector<std::string> rouge_tokens(const std::string& text);

// Word-level longest-common-subsequence P/R/F. Both texts empty scores 1.0;
// one side empty scores 0.0.
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

// Mean over sentences of the whitespace-token count of the union of cited
// fragment texts (overlaps counted once). Uncited sentences contribute 0;
// an output with no sentences scores 0. Throws on a citation that names no
// highlight in the output table.
double citation_length(const AttributedOutput& out, const DocumentSet& docs);

// 100 x uncited sentences / sentences. Throws on an empty output.
double no_attribution_rate(const AttributedOutput& out);

enum class AutoAisMode { span, full_sentence };

// Premise text for one sentence's citations: the merged cited fragments in
// document order then position (span), or the complete source sentences
// containing each fragment (full_sentence).
std::string autoais_premise(const std::vector<Highlight>& cited, const DocumentSet& docs,
                            AutoAisMode mode);

// Percent of sentences whose premise entails them; uncited sentences count
// as not entailed. Propagates judge failures to the caller.
double autoais(const AttributedOutput& out, const DocumentSet& docs, NliClient& nli,
               AutoAisMode mode);

// Partition agreement over co-clustered unordered id pairs. Two plans with
// no pairs at all (singletons only) agree perfectly.
double cluster_pair_f1(const Plan& gold, const Plan& pred);

// Kendall tau-b via merge-sort inversion counting; ties corrected.
// Throws when either input is constant or lengths mismatch / n < 2.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation of average ranks. Same error conditions.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

enum class CorrelationMethod { kendall, spearman };

struct CorrelationEstimate {
  double coefficient = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Coefficient on the full data plus a percentile bootstrap 95% interval,
// deterministic for a given config. Resamples where the statistic is
// undefined (constant draw) are skipped.
CorrelationEstimate rank_correlation(const std::vector<double>& x,
                                     const std::vector<double>& y,
                                     CorrelationMethod method,
                                     const BootstrapConfig& bootstrap);

// A scored instance. Optional fields stay unset when their inputs (reference
// text, gold plan/highlights, entailment judge) are absent or failed.
struct InstanceEval {
  std::string id;
  int sentence_count = 0;
  int uncited_sentences = 0;
  double citation_length_tokens = 0.0;
  double no_attribution_pct = 0.0;
  std::optional<RougeScore> rouge;
  std::optional<double> autoais_span_pct;
  std::optional<double> autoais_full_pct;
  std::optional<double> pair_f1;
  std::optional<double> span_iou;
  std::vector<std::string> warnings;
};

// Arithmetic means over the instances carrying each metric.
struct Aggregate {
  int instances = 0;
  double citation_length_tokens = 0.0;
  double no_attribution_pct = 0.0;
  std::optional<double> rouge_p, rouge_r, rouge_f;
  std::optional<double> autoais_span_pct, autoais_full_pct;
  std::optional<double> pair_f1, span_iou;
};

Aggregate aggregate_instances(const std::vector<InstanceEval>& instances);

struct CorrelationRow {
  std::string metric;
  std::string method;
  CorrelationEstimate estimate;
  int pairs = 0;
};

struct EvalReport {
  std::string label;
  std::vector<InstanceEval> instances;
  Aggregate aggregate;
  std::vector<CorrelationRow> correlations;
};

// Per-instance value of a named metric ("rouge_l_f", "citation_length",
// "no_attribution", "autoais_span", "autoais_full", "pair_f1", "span_iou"),
// unset when the instance was not scored on it.
std::optional<double> instance_metric(const InstanceEval& inst, const std::string& metric);

// Correlates a per-instance metric with external scores keyed by instance id,
// over the instances present in both. Throws when fewer than two pairs join.
CorrelationRow correlate_metric(const EvalReport& report, const std::string& metric,
                                const std::map<std::string, double>& external_scores,
                                CorrelationMethod method, const BootstrapConfig& bootstrap);

std::string report_to_json(const EvalReport& report);

// One row per report; the familiar results-table column set. Unset metrics
// render as empty cells.
std::string report_to_csv(const std::vector<EvalReport>& reports);

// How many times larger a is than b. Throws when b is not positive.
double length_ratio(double a, double b);

// Conciseness comparison between two methods' mean cited-content lengths.
double citation_length_ratio(const Aggregate& a, const Aggregate& b);

}  // namespace attrgen
