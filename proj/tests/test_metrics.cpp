#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "attrgen/metrics.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace attrgen;
using nlohmann::json;

namespace {

DocumentSet metric_docs() {
  DocumentSet docs;
  docs.docs.emplace_back("a", "one two three four five six seven eight");
  docs.docs.emplace_back("b", "red orange yellow green blue indigo violet");
  return docs;
}

Highlight word_highlight(int index, const std::string& doc, std::size_t start,
                         std::size_t end) {
  Highlight h;
  h.index = index;
  h.fragments = {{doc, start, end}};
  return h;
}

AttributedOutput basic_output() {
  AttributedOutput out;
  out.instance_id = "m1";
  out.mode = "stepwise";
  // "one two three" (3 tokens) and "red orange" (2 tokens)
  out.highlights = {word_highlight(1, "a", 0, 13), word_highlight(2, "b", 0, 10)};
  out.sentences = {{"First claim.", {1}}, {"Second claim.", {2}}};
  return out;
}

Plan make_plan(std::vector<std::vector<int>> clusters) {
  Plan p;
  for (auto& c : clusters) p.clusters.push_back({std::move(c)});
  return p;
}

// O(n^2) oracle: word LCS by full table.
std::size_t lcs_len(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1
                                     : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

// O(n^2) oracle: tau-b by direct pair counting.
double brute_kendall(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++ties_x;
      } else if (dy == 0) {
        ++ties_y;
      } else if (dx * dy > 0) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = double(x.size()) * double(x.size() - 1) / 2.0;
  double tx = 0, ty = 0;
  // tie corrections need per-group counts
  auto tie_sum = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double total = 0;
    std::size_t i = 0;
    while (i < v.size()) {
      std::size_t j = i;
      while (j < v.size() && v[j] == v[i]) ++j;
      const double t = double(j - i);
      total += t * (t - 1) / 2.0;
      i = j;
    }
    return total;
  };
  tx = tie_sum(x);
  ty = tie_sum(y);
  return (concordant - discordant) / std::sqrt((n0 - tx) * (n0 - ty));
}

// Oracle: Pearson over average ranks computed the slow way.
double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double other : v) {
        if (other < v[i]) ++less;
        if (other == v[i]) ++equal;
      }
      r[i] = less + (equal + 1) / 2.0;  // average rank, 1-based
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= double(rx.size());
  my /= double(ry.size());
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace

TEST_CASE("rouge tokens fold case and split on whitespace") {
  CHECK(rouge_tokens("The  CAT\nsat") == std::vector<std::string>{"the", "cat", "sat"});
  CHECK(rouge_tokens("").empty());
}

TEST_CASE("rouge_l known values") {
  CHECK(rouge_l("", "").f1 == 1.0);
  CHECK(rouge_l("some text", "").f1 == 0.0);
  CHECK(rouge_l("", "some text").f1 == 0.0);

  const RougeScore same = rouge_l("The Cat Sat", "the cat sat");
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  // candidate "the cat sat", reference "the cat": LCS 2
  const RougeScore partial = rouge_l("the cat sat", "the cat");
  CHECK(partial.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(partial.recall == 1.0);
  CHECK(partial.f1 == doctest::Approx(0.8).epsilon(1e-12));

  CHECK(rouge_l("aa bb", "cc dd").f1 == 0.0);
}

TEST_CASE("rouge_l equals the quadratic LCS oracle on random pairs") {
  std::mt19937 rng(99);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f"};
  for (int iter = 0; iter < 20; ++iter) {
    auto sample = [&](int max_len) {
      std::vector<std::string> words;
      const int n = int(rng() % (max_len + 1));
      for (int i = 0; i < n; ++i) words.push_back(pool[rng() % pool.size()]);
      return words;
    };
    const std::vector<std::string> a = sample(12), b = sample(12);
    std::string sa, sb;
    for (const std::string& w : a) sa += w + " ";
    for (const std::string& w : b) sb += w + " ";

    const RougeScore got = rouge_l(sa, sb);
    if (a.empty() || b.empty()) {
      CHECK(got.f1 == (a.empty() && b.empty() ? 1.0 : 0.0));
      continue;
    }
    const double lcs = double(lcs_len(a, b));
    CHECK(got.precision == lcs / double(a.size()));
    CHECK(got.recall == lcs / double(b.size()));
    const double want_f =
        lcs == 0 ? 0.0
                 : 2.0 * (lcs / a.size()) * (lcs / b.size()) /
                       (lcs / a.size() + lcs / b.size());
    CHECK(got.f1 == doctest::Approx(want_f).epsilon(1e-12));
  }
}

TEST_CASE("citation_length averages merged cited tokens per sentence") {
  const DocumentSet docs = metric_docs();
  AttributedOutput out = basic_output();
  // sentence 1 cites 3 tokens, sentence 2 cites 2: mean 2.5
  CHECK(citation_length(out, docs) == doctest::Approx(2.5).epsilon(1e-12));

  // double-citing the same highlight counts its words once
  out.sentences[0].citations = {1, 1};
  CHECK(citation_length(out, docs) == doctest::Approx(2.5).epsilon(1e-12));

  // an uncited sentence contributes zero to the mean
  out.sentences[1].citations.clear();
  CHECK(citation_length(out, docs) == doctest::Approx(1.5).epsilon(1e-12));

  // overlapping fragments merge before counting: [0,13) and [4,18) cover
  // "one two three four" = 4 tokens
  out.sentences[0].citations = {1, 3};
  out.highlights.push_back(word_highlight(3, "a", 4, 18));
  out.sentences[1].citations = {2};
  CHECK(citation_length(out, docs) == doctest::Approx(3.0).epsilon(1e-12));

  // citing a missing id throws
  out.sentences[0].citations = {9};
  CHECK_THROWS(citation_length(out, docs));

  AttributedOutput empty;
  empty.instance_id = "none";
  CHECK(citation_length(empty, docs) == 0.0);
}

TEST_CASE("no_attribution_rate is the uncited share in percent") {
  AttributedOutput out = basic_output();
  CHECK(no_attribution_rate(out) == 0.0);
  out.sentences[1].citations.clear();
  CHECK(no_attribution_rate(out) == 50.0);
  out.sentences[0].citations.clear();
  CHECK(no_attribution_rate(out) == 100.0);

  AttributedOutput empty;
  CHECK_THROWS(no_attribution_rate(empty));
}

TEST_CASE("autoais_premise orders fragments by document then position") {
  const DocumentSet docs = metric_docs();
  // citations listed out of order: doc b first, then late and early doc a
  const std::vector<Highlight> cited = {
      word_highlight(3, "b", 0, 10),   // "red orange"
      word_highlight(2, "a", 14, 23),  // "four five"
      word_highlight(1, "a", 0, 13),   // "one two three"
  };
  CHECK(autoais_premise(cited, docs, AutoAisMode::span) ==
        "one two three four five red orange");
}

TEST_CASE("full-sentence premises expand fragments to their sentences") {
  DocumentSet docs;
  docs.docs.emplace_back("s", "Alpha beta gamma. Delta epsilon zeta. Eta theta.");
  // fragment "beta" sits inside the first sentence
  const std::vector<Highlight> cited = {word_highlight(1, "s", 6, 10)};
  CHECK(autoais_premise(cited, docs, AutoAisMode::span) == "beta");
  CHECK(autoais_premise(cited, docs, AutoAisMode::full_sentence) ==
        "Alpha beta gamma.");

  // a fragment spanning two sentences pulls in both
  const std::vector<Highlight> wide = {word_highlight(1, "s", 12, 23)};
  CHECK(autoais_premise(wide, docs, AutoAisMode::full_sentence) ==
        "Alpha beta gamma. Delta epsilon zeta.");
}

TEST_CASE("autoais scores sentences against their own premises") {
  DocumentSet docs;
  docs.docs.emplace_back("s", "the moon is dry. the sun is hot.");
  AttributedOutput out;
  out.instance_id = "x";
  out.highlights = {word_highlight(1, "s", 0, 15), word_highlight(2, "s", 17, 31)};
  out.sentences = {{"the moon is dry", {1}},   // entailed by its citation
                   {"the sun is cold", {2}},   // "cold" not in premise
                   {"orphan claim", {}}};      // uncited counts against
  ContainmentNliClient nli;
  CHECK(autoais(out, docs, nli, AutoAisMode::span) ==
        doctest::Approx(100.0 / 3.0).epsilon(1e-12));

  // full-sentence premise rescues nothing here but never scores lower
  const double span = autoais(out, docs, nli, AutoAisMode::span);
  const double full = autoais(out, docs, nli, AutoAisMode::full_sentence);
  CHECK(full >= span);
}

TEST_CASE("cluster_pair_f1 counts co-clustered pairs") {
  CHECK(cluster_pair_f1(make_plan({{1, 2}, {3}}), make_plan({{1, 2, 3}})) == 0.5);
  CHECK(cluster_pair_f1(make_plan({{1, 2}, {3}}), make_plan({{1, 2}, {3}})) == 1.0);
  CHECK(cluster_pair_f1(make_plan({{1}, {2}}), make_plan({{1}, {2}})) == 1.0);
  CHECK(cluster_pair_f1(make_plan({{1}, {2}}), make_plan({{1, 2}})) == 0.0);
  // duplicate ids inside a cluster do not mint extra pairs
  CHECK(cluster_pair_f1(make_plan({{1, 1, 2}}), make_plan({{1, 2}})) == 1.0);
}

TEST_CASE("rank correlations match brute-force oracles") {
  std::mt19937 rng(512);
  for (int iter = 0; iter < 8; ++iter) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
      // small integer grids force ties
      x.push_back(double(rng() % 5));
      y.push_back(double(rng() % 4));
    }
    const auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double d) { return d == v[0]; });
    };
    if (constant(x) || constant(y)) continue;
    CHECK(kendall_tau(x, y) == doctest::Approx(brute_kendall(x, y)).epsilon(1e-9));
    CHECK(spearman_rho(x, y) == doctest::Approx(brute_spearman(x, y)).epsilon(1e-9));
  }
}

TEST_CASE("rank correlation endpoints and errors") {
  const std::vector<double> up = {1, 2, 3, 4, 5};
  const std::vector<double> down = {9, 7, 5, 3, 1};
  CHECK(kendall_tau(up, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kendall_tau(up, down) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(spearman_rho(up, up) == 1.0);
  CHECK(spearman_rho(up, down) == -1.0);

  CHECK_THROWS(kendall_tau({1, 1, 1}, {1, 2, 3}));
  CHECK_THROWS(spearman_rho({1, 2, 3}, {2, 2, 2}));
  CHECK_THROWS(kendall_tau({1, 2}, {1, 2, 3}));
  CHECK_THROWS(spearman_rho({1}, {2}));
}

TEST_CASE("bootstrap intervals are deterministic and bracket the estimate") {
  std::vector<double> x, y;
  std::mt19937 rng(64);
  for (int i = 0; i < 30; ++i) {
    const double v = double(i);
    x.push_back(v);
    y.push_back(v + double(rng() % 7));  // noisy monotone relation
  }
  BootstrapConfig cfg;
  cfg.samples = 200;
  cfg.size = 25;
  cfg.seed = 13;
  const CorrelationEstimate a = rank_correlation(x, y, CorrelationMethod::kendall, cfg);
  const CorrelationEstimate b = rank_correlation(x, y, CorrelationMethod::kendall, cfg);
  CHECK(a.coefficient == b.coefficient);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.ci_low <= a.coefficient);
  CHECK(a.coefficient <= a.ci_high);
  CHECK(a.ci_low < a.ci_high);

  cfg.seed = 14;
  const CorrelationEstimate c = rank_correlation(x, y, CorrelationMethod::kendall, cfg);
  CHECK(c.ci_low != a.ci_low);

  // no resampling: the interval collapses onto the coefficient
  cfg.samples = 0;
  const CorrelationEstimate d = rank_correlation(x, y, CorrelationMethod::spearman, cfg);
  CHECK(d.ci_low == d.coefficient);
  CHECK(d.ci_high == d.coefficient);
}

TEST_CASE("aggregate_instances means only the carriers") {
  InstanceEval a;
  a.id = "a";
  a.sentence_count = 2;
  a.citation_length_tokens = 10.0;
  a.no_attribution_pct = 0.0;
  a.rouge = RougeScore{0.5, 0.6, 0.7};
  a.autoais_span_pct = 40.0;

  InstanceEval b;
  b.id = "b";
  b.sentence_count = 1;
  b.citation_length_tokens = 20.0;
  b.no_attribution_pct = 50.0;
  // no rouge, no autoais: excluded from those means only

  const Aggregate agg = aggregate_instances({a, b});
  CHECK(agg.instances == 2);
  CHECK(agg.citation_length_tokens == 15.0);
  CHECK(agg.no_attribution_pct == 25.0);
  REQUIRE(agg.rouge_f.has_value());
  CHECK(*agg.rouge_f == 0.7);
  REQUIRE(agg.autoais_span_pct.has_value());
  CHECK(*agg.autoais_span_pct == 40.0);
  CHECK(!agg.autoais_full_pct.has_value());
  CHECK(!agg.pair_f1.has_value());
}

TEST_CASE("instance_metric names the per-instance values") {
  InstanceEval e;
  e.id = "x";
  e.citation_length_tokens = 7.0;
  e.no_attribution_pct = 25.0;
  e.rouge = RougeScore{0.1, 0.2, 0.3};
  e.pair_f1 = 0.5;
  CHECK(instance_metric(e, "citation_length") == 7.0);
  CHECK(instance_metric(e, "no_attribution") == 25.0);
  CHECK(instance_metric(e, "rouge_l_f") == 0.3);
  CHECK(instance_metric(e, "pair_f1") == 0.5);
  CHECK(!instance_metric(e, "autoais_span").has_value());
  CHECK_THROWS(instance_metric(e, "not_a_metric"));
}

TEST_CASE("correlate_metric joins instances with external scores") {
  EvalReport report;
  report.label = "test";
  for (int i = 0; i < 12; ++i) {
    InstanceEval e;
    e.id = "i" + std::to_string(i);
    e.citation_length_tokens = double(i);
    report.instances.push_back(e);
  }
  std::map<std::string, double> external;
  for (int i = 0; i < 12; ++i) external["i" + std::to_string(i)] = double(i % 7);
  external["ghost"] = 3.0;  // ignored: not in the report

  BootstrapConfig cfg;
  cfg.samples = 50;
  cfg.size = 10;
  const CorrelationRow row = correlate_metric(report, "citation_length", external,
                                              CorrelationMethod::kendall, cfg);
  CHECK(row.metric == "citation_length");
  CHECK(row.method == "kendall");
  CHECK(row.pairs == 12);

  std::map<std::string, double> tiny = {{"i0", 1.0}, {"ghost", 2.0}};
  CHECK_THROWS(correlate_metric(report, "citation_length", tiny,
                                CorrelationMethod::kendall, cfg));
}

TEST_CASE("report JSON carries aggregates, instances, and correlations") {
  EvalReport report;
  report.label = "demo";
  InstanceEval e;
  e.id = "one";
  e.sentence_count = 2;
  e.citation_length_tokens = 4.0;
  e.no_attribution_pct = 0.0;
  e.rouge = RougeScore{1.0, 1.0, 1.0};
  e.warnings = {"judge skipped"};
  report.instances = {e};
  report.aggregate = aggregate_instances(report.instances);

  const json j = json::parse(report_to_json(report));
  CHECK(j.at("label") == "demo");
  CHECK(j.at("aggregate").at("instances") == 1);
  CHECK(j.at("aggregate").at("rouge_l_f") == 1.0);
  CHECK(!j.at("aggregate").contains("autoais_span_pct"));
  REQUIRE(j.at("instances").size() == 1);
  CHECK(j["instances"][0].at("id") == "one");
  CHECK(j["instances"][0].at("warnings").size() == 1);
}

TEST_CASE("report CSV renders one row per report with empty unset cells") {
  EvalReport a;
  a.label = "alpha";
  InstanceEval e1;
  e1.id = "x";
  e1.citation_length_tokens = 12.5;
  e1.no_attribution_pct = 10.0;
  a.instances = {e1};
  a.aggregate = aggregate_instances(a.instances);

  EvalReport b;
  b.label = "beta";
  InstanceEval e2;
  e2.id = "y";
  e2.citation_length_tokens = 48.2;
  e2.no_attribution_pct = 0.0;
  e2.rouge = RougeScore{0.25, 0.5, 0.333};
  b.instances = {e2};
  b.aggregate = aggregate_instances(b.instances);

  const std::string csv = report_to_csv({a, b});
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t nl = csv.find('\n', pos);
    lines.push_back(csv.substr(pos, nl - pos));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] ==
        "method,instances,rouge_l_p,rouge_l_r,rouge_l_f,autoais_span_pct,"
        "autoais_full_pct,no_attribution_pct,citation_length_tokens,"
        "cluster_pair_f1,span_iou");
  CHECK(lines[1].substr(0, 8) == "alpha,1,");
  CHECK(lines[1].find(",12.5,") != std::string::npos);
  CHECK(lines[2].find("beta,1,0.25,0.5,0.333") == 0);
  CHECK(lines[2].find(",48.2,") != std::string::npos);
}

TEST_CASE("length ratios") {
  CHECK(length_ratio(2153.3, 48.2) == doctest::Approx(44.67).epsilon(1e-3));
  CHECK(length_ratio(843.6, 75.3) == doctest::Approx(11.2).epsilon(1e-3));
  CHECK_THROWS(length_ratio(1.0, 0.0));
  CHECK_THROWS(length_ratio(1.0, -2.0));

  Aggregate wide, tight;
  wide.citation_length_tokens = 2153.3;
  tight.citation_length_tokens = 48.2;
  const double ratio = citation_length_ratio(wide, tight);
  CHECK(ratio >= 44.0);
  CHECK(ratio <= 46.0);
}
