#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace attrgen {

using TokenId = int;

// Contiguity index over the source token sequences. transitions maps every
// context of length 0..n-1 to the tokens that extend it somewhere in some
// source; the empty context therefore lists every source token (also exposed
// as starters). A segment is decodable iff each of its windows of length
// min(n, segment length) occurs in a source.
struct NgramIndex {
  int order = 0;
  std::map<std::vector<TokenId>, std::set<TokenId>> transitions;
  std::set<TokenId> starters;

  // Allowed continuations of a segment, using its last min(len, n-1) tokens.
  const std::set<TokenId>* continuations(std::span<const TokenId> segment) const;
};

// Throws on order < 2 or when no source sequence has a token.
NgramIndex build_ngram_index(const std::vector<std::vector<TokenId>>& sources, int order);

enum class DecodeMode { selection, planning };

struct DecodeConstraints {
  DecodeMode mode = DecodeMode::selection;
  int min_words_per_highlight = 3;
  int min_highlights = 30;
  int max_per_cluster = 2;  // planning only; 0 = unlimited
  TokenId highlight_sep = -1;
  TokenId cluster_sep = -2;  // planning only
  TokenId end_token = -3;
  std::size_t max_length = 256;
};

// Derives per-task structural floors: 30 highlights for summarization runs,
// 5 for question answering.
int default_min_highlights(bool mds);

struct DecodeState {
  std::vector<TokenId> emitted;
  std::vector<TokenId> current_segment;  // content tokens since last structural token
  int highlights_done = 0;               // structurally terminated highlights
  int cluster_highlights = 0;            // highlights closed in the open cluster
  bool finished = false;

  void push(TokenId token, const DecodeConstraints& cfg);
  static DecodeState replay(std::span<const TokenId> emitted, const DecodeConstraints& cfg);
};

// Source continuations of the open segment, plus whichever structural tokens
// the counters permit: separators and the end token require the open segment
// to hold at least min_words_per_highlight tokens; the end token further
// requires the highlight count to reach min_highlights; in planning mode a
// cluster at max_per_cluster forces closure instead of another highlight
// separator. Structural tokens only ever extend the set.
std::set<TokenId> allowed_next_tokens(const DecodeState& state, const NgramIndex& index,
                                      const DecodeConstraints& cfg);

class TokenScorer {
 public:
  virtual ~TokenScorer() = default;
  virtual double score(std::span<const TokenId> prefix, TokenId token) const = 0;
};

// Greedy walk: highest-scoring allowed token each step (ties break toward
// the smaller id), until the end token or max_length. Throws on a dead end.
std::vector<TokenId> constrained_decode(const TokenScorer& scorer, const NgramIndex& index,
                                        const DecodeConstraints& cfg);

// The mask as a standalone callback for external decoding loops; state is
// replayed from the emitted ids on every call.
std::function<std::set<TokenId>(const std::vector<TokenId>&)> make_mask_callback(
    const NgramIndex& index, const DecodeConstraints& cfg);

// Whitespace-word vocabulary for driving the decoder over plain text.
struct TokenVocab {
  std::map<std::string, TokenId> ids;
  std::vector<std::string> words;

  TokenId intern(const std::string& word);
  const std::string& word(TokenId id) const;
};

std::vector<std::vector<TokenId>> tokenize_sources(const std::vector<std::string>& texts,
                                                   TokenVocab& vocab);

}  // namespace attrgen
