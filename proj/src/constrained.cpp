#include "attrgen/constrained.hpp"

#include <algorithm>
#include <stdexcept>

#include "attrgen/unicode.hpp"

namespace attrgen {

const std::set<TokenId>* NgramIndex::continuations(std::span<const TokenId> segment) const {
  const std::size_t context_len =
      std::min(segment.size(), static_cast<std::size_t>(order - 1));
  const std::vector<TokenId> context(segment.end() - context_len, segment.end());
  auto it = transitions.find(context);
  return it == transitions.end() ? nullptr : &it->second;
}

NgramIndex build_ngram_index(const std::vector<std::vector<TokenId>>& sources, int order) {
  if (order < 2) throw std::runtime_error("n-gram order must be at least 2");
  NgramIndex index;
  index.order = order;
  bool any_token = false;
  for (const std::vector<TokenId>& seq : sources) {
    for (std::size_t j = 0; j < seq.size(); ++j) {
      any_token = true;
      const std::size_t max_context =
          std::min(j, static_cast<std::size_t>(order - 1));
      for (std::size_t k = 0; k <= max_context; ++k) {
        std::vector<TokenId> context(seq.begin() + (j - k), seq.begin() + j);
        index.transitions[std::move(context)].insert(seq[j]);
      }
    }
  }
  if (!any_token) throw std::runtime_error("no source tokens to index");
  index.starters = index.transitions[{}];
  return index;
}

int default_min_highlights(bool mds) { return mds ? 30 : 5; }

void DecodeState::push(TokenId token, const DecodeConstraints& cfg) {
  if (finished) throw std::runtime_error("decode already finished");
  emitted.push_back(token);
  if (token == cfg.highlight_sep) {
    ++highlights_done;
    if (cfg.mode == DecodeMode::planning) ++cluster_highlights;
    current_segment.clear();
  } else if (cfg.mode == DecodeMode::planning && token == cfg.cluster_sep) {
    ++highlights_done;
    cluster_highlights = 0;
    current_segment.clear();
  } else if (token == cfg.end_token) {
    ++highlights_done;
    current_segment.clear();
    finished = true;
  } else {
    current_segment.push_back(token);
  }
}

DecodeState DecodeState::replay(std::span<const TokenId> emitted,
                                const DecodeConstraints& cfg) {
  DecodeState state;
  for (TokenId t : emitted) state.push(t, cfg);
  return state;
}

std::set<TokenId> allowed_next_tokens(const DecodeState& state, const NgramIndex& index,
                                      const DecodeConstraints& cfg) {
  std::set<TokenId> allowed;
  if (state.finished) return allowed;
  if (const std::set<TokenId>* next = index.continuations(state.current_segment)) {
    allowed = *next;
  }
  const bool segment_long_enough =
      state.current_segment.size() >=
      static_cast<std::size_t>(std::max(0, cfg.min_words_per_highlight));
  if (segment_long_enough) {
    const bool cluster_full =
        cfg.mode == DecodeMode::planning && cfg.max_per_cluster > 0 &&
        state.cluster_highlights + 2 > cfg.max_per_cluster;
    if (!cluster_full) allowed.insert(cfg.highlight_sep);
    if (cfg.mode == DecodeMode::planning) allowed.insert(cfg.cluster_sep);
    if (state.highlights_done + 1 >= cfg.min_highlights) allowed.insert(cfg.end_token);
  }
  return allowed;
}

std::vector<TokenId> constrained_decode(const TokenScorer& scorer, const NgramIndex& index,
                                        const DecodeConstraints& cfg) {
  DecodeState state;
  while (state.emitted.size() < cfg.max_length) {
    const std::set<TokenId> allowed = allowed_next_tokens(state, index, cfg);
    if (allowed.empty()) {
      throw std::runtime_error("decode dead end after " +
                               std::to_string(state.emitted.size()) + " tokens (" +
                               std::to_string(state.highlights_done) + " of " +
                               std::to_string(cfg.min_highlights) + " highlights)");
    }
    TokenId best = *allowed.begin();
    double best_score = scorer.score(state.emitted, best);
    for (auto it = std::next(allowed.begin()); it != allowed.end(); ++it) {
      const double s = scorer.score(state.emitted, *it);
      if (s > best_score) {
        best = *it;
        best_score = s;
      }
    }
    state.push(best, cfg);
    if (state.finished) break;
  }
  return state.emitted;
}

std::function<std::set<TokenId>(const std::vector<TokenId>&)> make_mask_callback(
    const NgramIndex& index, const DecodeConstraints& cfg) {
  return [&index, cfg](const std::vector<TokenId>& emitted) {
    const DecodeState state = DecodeState::replay(emitted, cfg);
    return allowed_next_tokens(state, index, cfg);
  };
}

TokenId TokenVocab::intern(const std::string& word) {
  auto it = ids.find(word);
  if (it != ids.end()) return it->second;
  const TokenId id = static_cast<TokenId>(words.size());
  ids.emplace(word, id);
  words.push_back(word);
  return id;
}

const std::string& TokenVocab::word(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return words[static_cast<std::size_t>(id)];
}

std::vector<std::vector<TokenId>> tokenize_sources(const std::vector<std::string>& texts,
                                                   TokenVocab& vocab) {
  std::vector<std::vector<TokenId>> sequences;
  sequences.reserve(texts.size());
  for (const std::string& text : texts) {
    std::vector<TokenId> seq;
    for (const std::string& word : split_words(text)) seq.push_back(vocab.intern(word));
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

}  // namespace attrgen
