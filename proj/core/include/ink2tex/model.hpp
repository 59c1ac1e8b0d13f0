#pragma once

#include <span>
#include <utility>

#include "ink2tex/attention.hpp"
#include "ink2tex/decoder.hpp"
#include "ink2tex/encoder.hpp"
#include "ink2tex/params.hpp"
#include "ink2tex/preprocess.hpp"

namespace ink2tex {

/// -sum_t log p(y_t | X, y_{t-1}) under teacher forcing, starting from <s>. `target` must be
/// non-empty and end with </s>; the terminal </s> is scored.
Var sequence_loss(Tape& tape, const ModelParams& params, const FeatureSequence& x, std::span<const TokenId> target);
double sequence_loss(const ModelParams& params, const FeatureSequence& x, std::span<const TokenId> target);

struct LossAndGrad {
  double loss = 0.0;
  Grad grad;
};

LossAndGrad loss_and_gradient(const ModelParams& params, const FeatureSequence& x, std::span<const TokenId> target);

/// Decoder state between steps.
struct DecodeState {
  Tensor s;
  AttentionState attention;
};

/// Incremental decoding of one input with one model. The encoder runs once in the
/// constructor; each step evaluates attention and the decoder on values only.
class SequenceDecoder {
 public:
  SequenceDecoder(const ModelParams& params, const FeatureSequence& x);

  DecodeState initial() const;
  /// Consumes y_prev and returns the next state and the distribution over the next token.
  std::pair<DecodeState, Tensor> step(const DecodeState& state, TokenId y_prev) const;

  const AnnotationSequence& annotations() const noexcept { return annotations_; }
  const ModelParams& params() const noexcept { return *params_; }

 private:
  const ModelParams* params_;
  AnnotationSequence annotations_;
  Tensor projected_;
};

}  // namespace ink2tex
