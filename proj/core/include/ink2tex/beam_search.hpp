#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ink2tex/encoder.hpp"
#include "ink2tex/errors.hpp"
#include "ink2tex/model.hpp"
#include "ink2tex/vocabulary.hpp"

namespace ink2tex {

struct BeamConfig {
  std::size_t beam = 10;
  std::size_t max_len = 200;
};

/// Anything that can score next tokens incrementally. `step(state, y_prev)` returns the
/// state after consuming y_prev and a probability for every vocabulary entry.
template <class S>
concept StepScorer = requires(const S& s, const typename S::State& st, TokenId y) {
  { s.vocab_size() } -> std::convertible_to<std::size_t>;
  { s.initial() } -> std::same_as<typename S::State>;
  { s.step(st, y) } -> std::same_as<std::pair<typename S::State, std::vector<double>>>;
};

template <class State>
struct BeamHypothesis {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  State state;
  bool finished = false;
};

template <class State>
struct BeamOutcome {
  BeamHypothesis<State> best;
  bool truncated = false;
};

/// Ranks every expansion by summed log probability (no length normalization) and walks down
/// the ranking until `beam` live hypotheses are kept; expansions ending in </s> met on the way
/// move to a finished pool without taking a slot. On the last step every finished expansion
/// enters the pool. Stops when the best finished hypothesis outscores every live one, nothing
/// is live, or max_len is reached. Returns the best finished hypothesis, else the best live
/// one flagged as truncated. Ties are broken by hypothesis index, then token index.
template <StepScorer Scorer>
BeamOutcome<typename Scorer::State> beam_search(const Scorer& scorer, const BeamConfig& config) {
  using State = typename Scorer::State;
  using Hyp = BeamHypothesis<State>;
  if (config.beam == 0) throw ConfigError("beam width must be at least 1");
  if (config.max_len == 0) throw ConfigError("max_len must be at least 1");
  const std::size_t vocab = scorer.vocab_size();

  std::vector<Hyp> live;
  live.push_back(Hyp{{}, 0.0, scorer.initial(), false});
  std::vector<Hyp> finished;

  struct Candidate {
    double score;
    std::size_t hyp;
    TokenId token;
  };

  for (std::size_t t = 0; t < config.max_len && !live.empty(); ++t) {
    std::vector<State> next_states;
    std::vector<Candidate> candidates;
    next_states.reserve(live.size());
    candidates.reserve(live.size() * vocab);
    for (std::size_t h = 0; h < live.size(); ++h) {
      const TokenId prev = live[h].tokens.empty() ? Vocabulary::kStart : live[h].tokens.back();
      auto [state, probs] = scorer.step(live[h].state, prev);
      if (probs.size() != vocab) throw DimensionError("scorer returned a distribution of the wrong size");
      next_states.push_back(std::move(state));
      for (TokenId k = 0; k < vocab; ++k) {
        if (!(probs[k] > 0.0)) continue;
        candidates.push_back({live[h].log_prob + std::log(probs[k]), h, k});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.token < b.token;
    });

    const bool last_step = t + 1 == config.max_len;
    std::vector<Hyp> next_live;
    for (const auto& c : candidates) {
      const bool ends = c.token == Vocabulary::kEnd;
      if (next_live.size() == config.beam && (!ends || !last_step)) {
        if (last_step) continue;
        break;
      }
      Hyp child{live[c.hyp].tokens, c.score, next_states[c.hyp], ends};
      child.tokens.push_back(c.token);
      (ends ? finished : next_live).push_back(std::move(child));
    }
    live = std::move(next_live);

    if (!finished.empty() && !live.empty()) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_finished = std::max(best_finished, f.log_prob);
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& l : live) best_live = std::max(best_live, l.log_prob);
      if (best_finished > best_live) break;
    }
  }

  auto best_of = [](std::vector<Hyp>& pool) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (pool[i].log_prob > pool[best].log_prob) best = i;
    }
    return std::move(pool[best]);
  };
  if (!finished.empty()) return {best_of(finished), false};
  if (live.empty()) throw Error("beam search found no hypothesis with non-zero probability");
  return {best_of(live), true};
}

/// Averages the next-token distributions of several models in probability space.
class EnsembleScorer {
 public:
  struct State {
    std::vector<DecodeState> per_model;
  };

  /// Throws ConfigError for an empty list or mismatched vocabularies.
  EnsembleScorer(std::span<const ModelParams> models, const FeatureSequence& x);

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  State initial() const;
  std::pair<State, std::vector<double>> step(const State& state, TokenId y_prev) const;

  /// Encoder output of model 0.
  const AnnotationSequence& annotations() const { return decoders_.front().annotations(); }

 private:
  std::vector<SequenceDecoder> decoders_;
  std::size_t vocab_size_ = 0;
};

/// Attention of model 0 along a decoded path: one row per emitted token.
struct AttentionTrace {
  Tensor steps;  // C x L
  std::vector<PointSpan> point_span;
  std::vector<std::string> tokens;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // including the terminal </s> when finished
  double log_prob = 0.0;
  bool truncated = false;
  AttentionTrace trace;
};

DecodeResult beam_search(std::span<const ModelParams> models, const FeatureSequence& x, const BeamConfig& config);

/// Teacher-forced log probability of `tokens` under the probability-averaged ensemble.
double score_sequence(std::span<const ModelParams> models, const FeatureSequence& x, std::span<const TokenId> tokens);

/// Token string for an id, using the model's stored vocabulary when it has one.
std::string token_name(const ModelConfig& config, TokenId id);

}  // namespace ink2tex
