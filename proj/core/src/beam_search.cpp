#include "ink2tex/beam_search.hpp"

namespace ink2tex {

EnsembleScorer::EnsembleScorer(std::span<const ModelParams> models, const FeatureSequence& x) {
  if (models.empty()) throw ConfigError("decoding needs at least one model");
  vocab_size_ = models.front().config.vocab_size;
  for (const auto& m : models) {
    if (m.config.vocab_size != vocab_size_) {
      throw ConfigError("ensemble members disagree on vocabulary size (" + std::to_string(vocab_size_) + " vs " +
                        std::to_string(m.config.vocab_size) + ")");
    }
    if (!m.config.vocabulary.empty() && !models.front().config.vocabulary.empty() &&
        m.config.vocabulary != models.front().config.vocabulary) {
      throw ConfigError("ensemble members disagree on vocabulary tokens");
    }
  }
  decoders_.reserve(models.size());
  for (const auto& m : models) decoders_.emplace_back(m, x);
}

EnsembleScorer::State EnsembleScorer::initial() const {
  State s;
  s.per_model.reserve(decoders_.size());
  for (const auto& d : decoders_) s.per_model.push_back(d.initial());
  return s;
}

std::pair<EnsembleScorer::State, std::vector<double>> EnsembleScorer::step(const State& state, TokenId y_prev) const {
  State next;
  next.per_model.reserve(decoders_.size());
  std::vector<double> mean(vocab_size_, 0.0);
  for (std::size_t i = 0; i < decoders_.size(); ++i) {
    auto [s, probs] = decoders_[i].step(state.per_model[i], y_prev);
    // Only model 0's attention is traced.
    if (i > 0) s.attention.alpha_history.clear();
    next.per_model.push_back(std::move(s));
    for (std::size_t k = 0; k < vocab_size_; ++k) mean[k] += probs[k];
  }
  const double n = static_cast<double>(decoders_.size());
  for (auto& p : mean) p /= n;
  return {std::move(next), std::move(mean)};
}

std::string token_name(const ModelConfig& config, TokenId id) {
  if (id < config.vocabulary.size()) return config.vocabulary[id];
  switch (id) {
    case Vocabulary::kStart: return std::string(Vocabulary::kStartToken);
    case Vocabulary::kEnd: return std::string(Vocabulary::kEndToken);
    case Vocabulary::kUnknown: return std::string(Vocabulary::kUnknownToken);
    default: return "#" + std::to_string(id);
  }
}

DecodeResult beam_search(std::span<const ModelParams> models, const FeatureSequence& x, const BeamConfig& config) {
  const EnsembleScorer scorer(models, x);
  auto outcome = beam_search(scorer, config);
  DecodeResult result;
  result.tokens = std::move(outcome.best.tokens);
  result.log_prob = outcome.best.log_prob;
  result.truncated = outcome.truncated;

  const auto& history = outcome.best.state.per_model.front().attention.alpha_history;
  const std::size_t length = scorer.annotations().a.shape()[0];
  result.trace.steps = Tensor({history.size(), length});
  for (std::size_t t = 0; t < history.size(); ++t) {
    std::copy(history[t].values().begin(), history[t].values().end(), result.trace.steps.data() + t * length);
  }
  result.trace.point_span = scorer.annotations().point_span;
  for (auto id : result.tokens) result.trace.tokens.push_back(token_name(models.front().config, id));
  return result;
}

double score_sequence(std::span<const ModelParams> models, const FeatureSequence& x, std::span<const TokenId> tokens) {
  const EnsembleScorer scorer(models, x);
  auto state = scorer.initial();
  TokenId prev = Vocabulary::kStart;
  double total = 0.0;
  for (const TokenId y : tokens) {
    auto [next, probs] = scorer.step(state, prev);
    if (y >= probs.size()) throw DimensionError("score_sequence: token out of range");
    total += std::log(probs[y]);
    state = std::move(next);
    prev = y;
  }
  return total;
}

}  // namespace ink2tex
