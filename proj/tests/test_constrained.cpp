#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "attrgen/constrained.hpp"
#include "doctest.h"

using namespace attrgen;

namespace {

// Fixed token ids for readability: a=0 b=1 c=2 d=3.
constexpr TokenId A = 0, B = 1, C = 2, D = 3;
constexpr TokenId SEP = -1, CSEP = -2, END = -3;

DecodeConstraints constraints(DecodeMode mode, int min_words, int min_highlights,
                              int max_per_cluster = 0) {
  DecodeConstraints cfg;
  cfg.mode = mode;
  cfg.min_words_per_highlight = min_words;
  cfg.min_highlights = min_highlights;
  cfg.max_per_cluster = max_per_cluster;
  cfg.highlight_sep = SEP;
  cfg.cluster_sep = CSEP;
  cfg.end_token = END;
  return cfg;
}

std::set<TokenId> step(const std::vector<TokenId>& emitted, const NgramIndex& index,
                       const DecodeConstraints& cfg) {
  return allowed_next_tokens(DecodeState::replay(emitted, cfg), index, cfg);
}

// Independent contiguity check: a short segment must appear as-is in some
// source; a long one must have every length-n window appear in some source.
bool segment_ok(const std::vector<TokenId>& seg,
                const std::vector<std::vector<TokenId>>& sources, int n) {
  if (seg.empty()) return true;
  const std::size_t w = std::min<std::size_t>(seg.size(), std::size_t(n));
  for (std::size_t from = 0; from + w <= seg.size(); ++from) {
    bool found = false;
    for (const std::vector<TokenId>& src : sources) {
      for (std::size_t p = 0; p + w <= src.size() && !found; ++p) {
        found = std::equal(seg.begin() + from, seg.begin() + from + w, src.begin() + p);
      }
      if (found) break;
    }
    if (!found) return false;
  }
  return true;
}

bool sequence_ok(const std::vector<TokenId>& seq,
                 const std::vector<std::vector<TokenId>>& sources, int n) {
  std::vector<TokenId> seg;
  for (TokenId t : seq) {
    if (t == SEP) {
      if (!segment_ok(seg, sources, n)) return false;
      seg.clear();
    } else {
      seg.push_back(t);
    }
  }
  return segment_ok(seg, sources, n);
}

bool mask_permits(const std::vector<TokenId>& seq, const NgramIndex& index,
                  const DecodeConstraints& cfg) {
  DecodeState state;
  for (TokenId t : seq) {
    const std::set<TokenId> allowed = allowed_next_tokens(state, index, cfg);
    if (allowed.find(t) == allowed.end()) return false;
    state.push(t, cfg);
  }
  return true;
}

}  // namespace

TEST_CASE("ngram index records starters and context transitions") {
  const NgramIndex idx = build_ngram_index({{A, B, A, C}}, 2);
  CHECK(idx.starters == std::set<TokenId>{A, B, C});

  const std::vector<TokenId> empty_ctx;
  CHECK(*idx.continuations(empty_ctx) == std::set<TokenId>{A, B, C});
  const std::vector<TokenId> after_a{A};
  CHECK(*idx.continuations(after_a) == std::set<TokenId>{B, C});
  const std::vector<TokenId> after_b{B};
  CHECK(*idx.continuations(after_b) == std::set<TokenId>{A});
  // c ends the source: no continuation recorded
  const std::vector<TokenId> after_c{C};
  const std::set<TokenId>* none = idx.continuations(after_c);
  CHECK((none == nullptr || none->empty()));

  CHECK_THROWS(build_ngram_index({{A, B}}, 1));
  CHECK_THROWS(build_ngram_index({}, 2));
  CHECK_THROWS(build_ngram_index({{}}, 2));
}

TEST_CASE("long contexts use only their last n-1 tokens") {
  const NgramIndex idx = build_ngram_index({{A, B, C}}, 2);
  // segment "a b" continues via context "b" alone
  const std::vector<TokenId> ab{A, B};
  CHECK(*idx.continuations(ab) == std::set<TokenId>{C});

  const NgramIndex tri = build_ngram_index({{A, B, C}, {B, C, A}}, 3);
  const std::vector<TokenId> bc{B, C};
  CHECK(*tri.continuations(bc) == std::set<TokenId>{A});
  // a two-token context that never occurs contiguously has no continuations
  const std::vector<TokenId> ca{C, A};
  const std::set<TokenId>* none = tri.continuations(ca);
  CHECK((none == nullptr || none->empty()));
}

TEST_CASE("selection walk gates separators and the end token") {
  const NgramIndex idx = build_ngram_index({{A, B, C}}, 2);
  const DecodeConstraints cfg = constraints(DecodeMode::selection, 2, 2);

  CHECK(step({}, idx, cfg) == std::set<TokenId>{A, B, C});
  CHECK(step({A}, idx, cfg) == std::set<TokenId>{B});
  // two words reached: the separator opens, the end stays shut (1 < 2)
  CHECK(step({A, B}, idx, cfg) == std::set<TokenId>{SEP, C});
  CHECK(step({A, B, SEP}, idx, cfg) == std::set<TokenId>{A, B, C});
  CHECK(step({A, B, SEP, B}, idx, cfg) == std::set<TokenId>{C});
  // second highlight at length two: now the end token joins
  CHECK(step({A, B, SEP, B, C}, idx, cfg) == std::set<TokenId>{SEP, END});
  // nothing follows the end token
  CHECK(step({A, B, SEP, B, C, END}, idx, cfg).empty());
}

TEST_CASE("planning walk closes clusters at the cap") {
  const NgramIndex idx = build_ngram_index({{A, B}}, 2);
  const DecodeConstraints one = constraints(DecodeMode::planning, 1, 2, 1);

  // a one-highlight cluster cannot take a second: highlight separator blocked
  CHECK(step({A}, idx, one) == std::set<TokenId>{B, CSEP});
  CHECK(step({A, CSEP}, idx, one) == std::set<TokenId>{A, B});
  CHECK(step({A, CSEP, B}, idx, one) == std::set<TokenId>{CSEP, END});

  const DecodeConstraints two = constraints(DecodeMode::planning, 1, 2, 2);
  // room for a second highlight in the open cluster
  CHECK(step({A}, idx, two) == std::set<TokenId>{B, SEP, CSEP});
  // after it, the cluster is full
  CHECK(step({A, SEP, B}, idx, two) == std::set<TokenId>{CSEP, END});

  // selection mode never offers the cluster separator
  const DecodeConstraints sel = constraints(DecodeMode::selection, 1, 1);
  const std::set<TokenId> s = step({A}, idx, sel);
  CHECK(s.find(CSEP) == s.end());
}

TEST_CASE("tokens outside the sources never appear in the mask") {
  const NgramIndex idx = build_ngram_index({{A, B, C}, {C, A}}, 2);
  const DecodeConstraints cfg = constraints(DecodeMode::selection, 0, 0);
  // walk every reachable extension breadth-first up to length 4
  std::vector<std::vector<TokenId>> frontier = {{}};
  for (int depth = 0; depth < 4; ++depth) {
    std::vector<std::vector<TokenId>> next;
    for (const std::vector<TokenId>& prefix : frontier) {
      const std::set<TokenId> allowed =
          step(prefix, idx, cfg);
      CHECK(allowed.find(D) == allowed.end());
      for (TokenId t : allowed) {
        if (t == END) continue;
        std::vector<TokenId> ext = prefix;
        ext.push_back(t);
        next.push_back(std::move(ext));
      }
    }
    frontier = std::move(next);
  }
}

TEST_CASE("structural tokens only extend the content continuations") {
  const NgramIndex idx = build_ngram_index({{A, B, C}}, 2);
  const DecodeConstraints strict = constraints(DecodeMode::selection, 3, 1);
  const DecodeConstraints loose = constraints(DecodeMode::selection, 0, 0);
  const std::vector<std::vector<TokenId>> prefixes = {
      {}, {A}, {A, B}, {A, B, C}};
  for (const std::vector<TokenId>& p : prefixes) {
    const std::set<TokenId> with = step(p, idx, loose);
    const std::set<TokenId> without = step(p, idx, strict);
    for (TokenId t : without) {
      if (t >= 0) CHECK(with.count(t) == 1);
    }
    for (TokenId t : with) {
      if (t >= 0) CHECK(without.count(t) == 1);
    }
  }
}

namespace {

class FixedScorer : public TokenScorer {
 public:
  explicit FixedScorer(std::map<TokenId, double> table) : table_(std::move(table)) {}
  double score(std::span<const TokenId>, TokenId token) const override {
    const auto it = table_.find(token);
    return it == table_.end() ? -100.0 : it->second;
  }

 private:
  std::map<TokenId, double> table_;
};

}  // namespace

TEST_CASE("greedy decode follows scores inside the mask") {
  const NgramIndex idx = build_ngram_index({{A, B, C}}, 2);
  const DecodeConstraints cfg = constraints(DecodeMode::selection, 1, 1);
  // d scores highest but is never allowed; end beats the separator
  const FixedScorer scorer({{D, 99.0}, {A, 0.1}, {B, 0.2}, {C, 0.3}, {SEP, 0.0}, {END, 1.0}});
  const std::vector<TokenId> out = constrained_decode(scorer, idx, cfg);
  CHECK(out == std::vector<TokenId>{C, END});
}

TEST_CASE("decode reports dead ends") {
  const NgramIndex idx = build_ngram_index({{A, B}}, 2);
  const DecodeConstraints cfg = constraints(DecodeMode::selection, 3, 1);
  const FixedScorer scorer({{A, 1.0}, {B, 0.5}});
  CHECK_THROWS_WITH_AS(constrained_decode(scorer, idx, cfg),
                       doctest::Contains("dead end"), std::runtime_error);
}

TEST_CASE("mask callback equals the incremental mask") {
  const NgramIndex idx = build_ngram_index({{A, B, A, C}, {C, B}}, 2);
  const DecodeConstraints cfg = constraints(DecodeMode::selection, 1, 1);
  const auto mask = make_mask_callback(idx, cfg);
  const std::vector<std::vector<TokenId>> prefixes = {
      {}, {A}, {A, B}, {A, B, SEP}, {A, B, SEP, C}, {C, B, SEP, A, C}};
  for (const std::vector<TokenId>& p : prefixes) {
    CHECK(mask(p) == step(p, idx, cfg));
  }
}

TEST_CASE("mask language equals brute-force segment filtering") {
  // every sequence over {a,b,c,sep} up to length 5, two source settings
  const std::vector<std::vector<std::vector<TokenId>>> corpora = {
      {{A, B, A, C}},
      {{A, B, C}, {C, A}},
      {{B, B, A}, {A, C, C, B}},
  };
  for (int n = 2; n <= 3; ++n) {
    for (const auto& sources : corpora) {
      const NgramIndex idx = build_ngram_index(sources, n);
      const DecodeConstraints cfg = constraints(DecodeMode::selection, 0, 0);
      const std::vector<TokenId> alphabet = {A, B, C, SEP};
      std::vector<std::vector<TokenId>> frontier = {{}};
      for (int len = 1; len <= 5; ++len) {
        std::vector<std::vector<TokenId>> next;
        for (const std::vector<TokenId>& prefix : frontier) {
          for (TokenId t : alphabet) {
            std::vector<TokenId> seq = prefix;
            seq.push_back(t);
            INFO("n=", n, " len=", len);
            CHECK(mask_permits(seq, idx, cfg) == sequence_ok(seq, sources, n));
            next.push_back(std::move(seq));
          }
        }
        frontier = std::move(next);
      }
    }
  }
}

TEST_CASE("word vocab interning round trips") {
  TokenVocab vocab;
  const TokenId cat = vocab.intern("cat");
  const TokenId dog = vocab.intern("dog");
  CHECK(vocab.intern("cat") == cat);
  CHECK(cat != dog);
  CHECK(vocab.word(cat) == "cat");

  TokenVocab fresh;
  const auto sources = tokenize_sources({"the cat sat", "the dog"}, fresh);
  REQUIRE(sources.size() == 2);
  CHECK(sources[0].size() == 3);
  CHECK(sources[1].size() == 2);
  CHECK(sources[0][0] == sources[1][0]);  // "the" shares an id
  const NgramIndex idx = build_ngram_index(sources, 2);
  CHECK(idx.starters.size() == 4);
}

TEST_CASE("structural floors per task") {
  CHECK(default_min_highlights(true) == 30);
  CHECK(default_min_highlights(false) == 5);
}
