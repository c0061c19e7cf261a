#include "attrgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "attrgen/grounding.hpp"
#include "attrgen/markup.hpp"
#include "attrgen/unicode.hpp"

namespace attrgen {

using json = nlohmann::ordered_json;

std::vector<std::string> rouge_tokens(const std::string& text) {
  std::u32string folded;
  for (char32_t cp : to_u32(text)) folded.push_back(fold_case(cp));
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = folded.size();
  while (i < n) {
    while (i < n && is_space(folded[i])) ++i;
    const std::size_t start = i;
    while (i < n && !is_space(folded[i])) ++i;
    if (i > start) {
      tokens.push_back(to_utf8(std::u32string_view(folded).substr(start, i - start)));
    }
  }
  return tokens;
}

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> cand = rouge_tokens(candidate);
  const std::vector<std::string> ref = rouge_tokens(reference);
  if (cand.empty() && ref.empty()) return {1.0, 1.0, 1.0};
  if (cand.empty() || ref.empty()) return {0.0, 0.0, 0.0};
  // Rolling-row LCS over word ids.
  const std::size_t n = cand.size(), m = ref.size();
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (cand[i - 1] == ref[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[m]);
  RougeScore score;
  score.precision = lcs / static_cast<double>(n);
  score.recall = lcs / static_cast<double>(m);
  if (score.precision + score.recall > 0.0) {
    score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
  }
  return score;
}

namespace {

std::unordered_map<int, const Highlight*> highlight_table(const AttributedOutput& out) {
  std::unordered_map<int, const Highlight*> table;
  for (const Highlight& h : out.highlights) table[h.index] = &h;
  return table;
}

std::vector<Highlight> cited_highlights(const AttributedSentence& sentence,
                                        const std::unordered_map<int, const Highlight*>& table) {
  std::vector<Highlight> cited;
  for (int id : sentence.citations) {
    auto it = table.find(id);
    if (it == table.end()) {
      throw std::runtime_error("sentence cites highlight " + std::to_string(id) +
                               " which the output does not carry");
    }
    cited.push_back(*it->second);
  }
  return cited;
}

}  // namespace

double citation_length(const AttributedOutput& out, const DocumentSet& docs) {
  if (out.sentences.empty()) return 0.0;
  const auto table = highlight_table(out);
  double total = 0.0;
  for (const AttributedSentence& sentence : out.sentences) {
    const std::vector<Highlight> cited = cited_highlights(sentence, table);
    for (const auto& [doc_id, spans] : merged_fragments_by_doc(cited)) {
      const Document& doc = docs.doc_by_id(doc_id);
      for (const TextSpan& span : spans) {
        total += static_cast<double>(count_words(doc.slice(span.start, span.end)));
      }
    }
  }
  return total / static_cast<double>(out.sentences.size());
}

double no_attribution_rate(const AttributedOutput& out) {
  if (out.sentences.empty()) throw std::runtime_error("output has no sentences to rate");
  std::size_t uncited = 0;
  for (const AttributedSentence& s : out.sentences) {
    if (s.citations.empty()) ++uncited;
  }
  return 100.0 * static_cast<double>(uncited) / static_cast<double>(out.sentences.size());
}

std::string autoais_premise(const std::vector<Highlight>& cited, const DocumentSet& docs,
                            AutoAisMode mode) {
  const auto by_doc = merged_fragments_by_doc(cited);
  std::string premise;
  auto append = [&premise](const std::string& piece) {
    if (piece.empty()) return;
    if (!premise.empty()) premise += ' ';
    premise += piece;
  };
  for (const Document& doc : docs.docs) {
    auto it = by_doc.find(doc.id());
    if (it == by_doc.end()) continue;
    if (mode == AutoAisMode::span) {
      for (const TextSpan& span : it->second) append(doc.slice(span.start, span.end));
      continue;
    }
    const std::vector<SentenceSpan> sentences = segment_sentences(doc.chars());
    std::set<std::size_t> picked;
    for (const TextSpan& frag : it->second) {
      bool hit = false;
      for (std::size_t si = 0; si < sentences.size(); ++si) {
        if (sentences[si].start < frag.end && frag.start < sentences[si].end) {
          picked.insert(si);
          hit = true;
        }
      }
      if (!hit) append(doc.slice(frag.start, frag.end));  // whitespace-only fragment
    }
    for (std::size_t si : picked) append(doc.slice(sentences[si].start, sentences[si].end));
  }
  return premise;
}

double autoais(const AttributedOutput& out, const DocumentSet& docs, NliClient& nli,
               AutoAisMode mode) {
  if (out.sentences.empty()) throw std::runtime_error("output has no sentences to judge");
  const auto table = highlight_table(out);
  std::size_t entailed = 0;
  for (const AttributedSentence& sentence : out.sentences) {
    if (sentence.citations.empty()) continue;
    const std::string premise =
        autoais_premise(cited_highlights(sentence, table), docs, mode);
    if (nli.entails(premise, sentence.text)) ++entailed;
  }
  return 100.0 * static_cast<double>(entailed) / static_cast<double>(out.sentences.size());
}

namespace {

std::set<std::pair<int, int>> co_clustered_pairs(const Plan& plan) {
  std::set<std::pair<int, int>> pairs;
  for (const Cluster& cluster : plan.clusters) {
    std::vector<int> ids = cluster.highlight_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        pairs.emplace(ids[i], ids[j]);
      }
    }
  }
  return pairs;
}

}  // namespace

double cluster_pair_f1(const Plan& gold, const Plan& pred) {
  const auto gold_pairs = co_clustered_pairs(gold);
  const auto pred_pairs = co_clustered_pairs(pred);
  if (gold_pairs.empty() && pred_pairs.empty()) return 1.0;
  std::size_t tp = 0;
  for (const auto& p : pred_pairs) {
    if (gold_pairs.count(p)) ++tp;
  }
  const double precision =
      pred_pairs.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred_pairs.size());
  const double recall =
      gold_pairs.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold_pairs.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

void check_paired(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::runtime_error("correlation inputs differ in length");
  if (x.size() < 2) throw std::runtime_error("correlation needs at least two pairs");
}

// Exchange count of a merge sort, the Knight trick for discordant pairs.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                               std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::uint64_t tie_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::uint64_t pairs = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const std::uint64_t g = j - i;
    pairs += g * (g - 1) / 2;
    i = j;
  }
  return pairs;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

}  // namespace

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  check_paired(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::uint64_t joint_ties = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && x[order[j]] == x[order[i]] && y[order[j]] == y[order[i]]) ++j;
      const std::uint64_t g = j - i;
      joint_ties += g * (g - 1) / 2;
      i = j;
    }
  }
  std::vector<double> y_sorted(n);
  for (std::size_t i = 0; i < n; ++i) y_sorted[i] = y[order[i]];
  std::vector<double> buf(n);
  const std::uint64_t swaps = count_inversions(y_sorted, buf, 0, n);
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = tie_pairs(x);
  const std::uint64_t n2 = tie_pairs(y);
  if (n0 == n1 || n0 == n2) {
    throw std::runtime_error("rank correlation undefined: constant input");
  }
  const double concordant_minus_discordant =
      static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
      static_cast<double>(joint_ties) - 2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
  return concordant_minus_discordant / denom;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  check_paired(x, y);
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const std::size_t n = rx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::runtime_error("rank correlation undefined: constant input");
  }
  return sxy / std::sqrt(sxx * syy);
}

CorrelationEstimate rank_correlation(const std::vector<double>& x,
                                     const std::vector<double>& y,
                                     CorrelationMethod method,
                                     const BootstrapConfig& bootstrap) {
  check_paired(x, y);
  auto stat = [method](const std::vector<double>& a, const std::vector<double>& b) {
    return method == CorrelationMethod::kendall ? kendall_tau(a, b) : spearman_rho(a, b);
  };
  CorrelationEstimate estimate;
  estimate.coefficient = stat(x, y);
  if (bootstrap.samples <= 0) {
    estimate.ci_low = estimate.ci_high = estimate.coefficient;
    return estimate;
  }
  const std::size_t n = x.size();
  const std::size_t size = bootstrap.size > 0 ? static_cast<std::size_t>(bootstrap.size) : n;
  std::mt19937_64 rng(bootstrap.seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(bootstrap.samples));
  std::vector<double> rx(size), ry(size);
  for (int s = 0; s < bootstrap.samples; ++s) {
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t pick = static_cast<std::size_t>(rng() % n);
      rx[i] = x[pick];
      ry[i] = y[pick];
    }
    try {
      stats.push_back(stat(rx, ry));
    } catch (const std::exception&) {
      // constant resample, skip
    }
  }
  if (stats.empty()) {
    estimate.ci_low = estimate.ci_high = estimate.coefficient;
    return estimate;
  }
  std::sort(stats.begin(), stats.end());
  auto percentile = [&stats](double p) {
    const double pos = p * static_cast<double>(stats.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, stats.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return stats[lo] * (1.0 - frac) + stats[hi] * frac;
  };
  estimate.ci_low = percentile(0.025);
  estimate.ci_high = percentile(0.975);
  return estimate;
}

Aggregate aggregate_instances(const std::vector<InstanceEval>& instances) {
  Aggregate agg;
  agg.instances = static_cast<int>(instances.size());
  if (instances.empty()) return agg;
  double cit = 0.0, noatt = 0.0;
  double rp = 0.0, rr = 0.0, rf = 0.0, sp = 0.0, fu = 0.0, pf = 0.0, iou = 0.0;
  int nr = 0, nsp = 0, nfu = 0, npf = 0, niou = 0;
  for (const InstanceEval& inst : instances) {
    cit += inst.citation_length_tokens;
    noatt += inst.no_attribution_pct;
    if (inst.rouge) {
      rp += inst.rouge->precision;
      rr += inst.rouge->recall;
      rf += inst.rouge->f1;
      ++nr;
    }
    if (inst.autoais_span_pct) {
      sp += *inst.autoais_span_pct;
      ++nsp;
    }
    if (inst.autoais_full_pct) {
      fu += *inst.autoais_full_pct;
      ++nfu;
    }
    if (inst.pair_f1) {
      pf += *inst.pair_f1;
      ++npf;
    }
    if (inst.span_iou) {
      iou += *inst.span_iou;
      ++niou;
    }
  }
  const double n = static_cast<double>(instances.size());
  agg.citation_length_tokens = cit / n;
  agg.no_attribution_pct = noatt / n;
  if (nr > 0) {
    agg.rouge_p = rp / nr;
    agg.rouge_r = rr / nr;
    agg.rouge_f = rf / nr;
  }
  if (nsp > 0) agg.autoais_span_pct = sp / nsp;
  if (nfu > 0) agg.autoais_full_pct = fu / nfu;
  if (npf > 0) agg.pair_f1 = pf / npf;
  if (niou > 0) agg.span_iou = iou / niou;
  return agg;
}

std::optional<double> instance_metric(const InstanceEval& inst, const std::string& metric) {
  if (metric == "rouge_l_f") {
    if (inst.rouge) return inst.rouge->f1;
    return std::nullopt;
  }
  if (metric == "citation_length") return inst.citation_length_tokens;
  if (metric == "no_attribution") return inst.no_attribution_pct;
  if (metric == "autoais_span") return inst.autoais_span_pct;
  if (metric == "autoais_full") return inst.autoais_full_pct;
  if (metric == "pair_f1") return inst.pair_f1;
  if (metric == "span_iou") return inst.span_iou;
  throw std::runtime_error("unknown metric: " + metric);
}

CorrelationRow correlate_metric(const EvalReport& report, const std::string& metric,
                                const std::map<std::string, double>& external_scores,
                                CorrelationMethod method, const BootstrapConfig& bootstrap) {
  std::vector<double> ours, theirs;
  for (const InstanceEval& inst : report.instances) {
    const std::optional<double> value = instance_metric(inst, metric);
    if (!value) continue;
    auto it = external_scores.find(inst.id);
    if (it == external_scores.end()) continue;
    ours.push_back(*value);
    theirs.push_back(it->second);
  }
  if (ours.size() < 2) {
    throw std::runtime_error("correlation for '" + metric + "' joins only " +
                             std::to_string(ours.size()) + " instances");
  }
  CorrelationRow row;
  row.metric = metric;
  row.method = method == CorrelationMethod::kendall ? "kendall" : "spearman";
  row.estimate = rank_correlation(ours, theirs, method, bootstrap);
  row.pairs = static_cast<int>(ours.size());
  return row;
}

namespace {

json aggregate_to_json(const Aggregate& agg) {
  json j = json::object();
  j["instances"] = agg.instances;
  j["citation_length_tokens"] = agg.citation_length_tokens;
  j["no_attribution_pct"] = agg.no_attribution_pct;
  if (agg.rouge_f) {
    j["rouge_l_p"] = *agg.rouge_p;
    j["rouge_l_r"] = *agg.rouge_r;
    j["rouge_l_f"] = *agg.rouge_f;
  }
  if (agg.autoais_span_pct) j["autoais_span_pct"] = *agg.autoais_span_pct;
  if (agg.autoais_full_pct) j["autoais_full_pct"] = *agg.autoais_full_pct;
  if (agg.pair_f1) j["cluster_pair_f1"] = *agg.pair_f1;
  if (agg.span_iou) j["span_iou"] = *agg.span_iou;
  return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j = json::object();
  j["label"] = report.label;
  j["aggregate"] = aggregate_to_json(report.aggregate);
  json rows = json::array();
  for (const InstanceEval& inst : report.instances) {
    json r = json::object();
    r["id"] = inst.id;
    r["sentences"] = inst.sentence_count;
    r["uncited_sentences"] = inst.uncited_sentences;
    r["citation_length_tokens"] = inst.citation_length_tokens;
    r["no_attribution_pct"] = inst.no_attribution_pct;
    if (inst.rouge) {
      r["rouge_l_p"] = inst.rouge->precision;
      r["rouge_l_r"] = inst.rouge->recall;
      r["rouge_l_f"] = inst.rouge->f1;
    }
    if (inst.autoais_span_pct) r["autoais_span_pct"] = *inst.autoais_span_pct;
    if (inst.autoais_full_pct) r["autoais_full_pct"] = *inst.autoais_full_pct;
    if (inst.pair_f1) r["cluster_pair_f1"] = *inst.pair_f1;
    if (inst.span_iou) r["span_iou"] = *inst.span_iou;
    if (!inst.warnings.empty()) r["warnings"] = inst.warnings;
    rows.push_back(std::move(r));
  }
  j["instances"] = std::move(rows);
  if (!report.correlations.empty()) {
    json rows2 = json::array();
    for (const CorrelationRow& row : report.correlations) {
      json r = json::object();
      r["metric"] = row.metric;
      r["method"] = row.method;
      r["coefficient"] = row.estimate.coefficient;
      r["ci_low"] = row.estimate.ci_low;
      r["ci_high"] = row.estimate.ci_high;
      r["pairs"] = row.pairs;
      rows2.push_back(std::move(r));
    }
    j["correlations"] = std::move(rows2);
  }
  return j.dump(2);
}

namespace {

std::string csv_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string report_to_csv(const std::vector<EvalReport>& reports) {
  std::string csv =
      "method,instances,rouge_l_p,rouge_l_r,rouge_l_f,autoais_span_pct,autoais_full_pct,"
      "no_attribution_pct,citation_length_tokens,cluster_pair_f1,span_iou\n";
  for (const EvalReport& report : reports) {
    const Aggregate& a = report.aggregate;
    csv += csv_escape(report.label);
    csv += ',' + std::to_string(a.instances);
    csv += ',' + csv_cell(a.rouge_p);
    csv += ',' + csv_cell(a.rouge_r);
    csv += ',' + csv_cell(a.rouge_f);
    csv += ',' + csv_cell(a.autoais_span_pct);
    csv += ',' + csv_cell(a.autoais_full_pct);
    csv += ',' + csv_cell(a.no_attribution_pct);
    csv += ',' + csv_cell(a.citation_length_tokens);
    csv += ',' + csv_cell(a.pair_f1);
    csv += ',' + csv_cell(a.span_iou);
    csv += '\n';
  }
  return csv;
}

double length_ratio(double a, double b) {
  if (b <= 0.0) throw std::runtime_error("length ratio needs a positive denominator");
  return a / b;
}

double citation_length_ratio(const Aggregate& a, const Aggregate& b) {
  return length_ratio(a.citation_length_tokens, b.citation_length_tokens);
}

}  // namespace attrgen
