#pragma once

#include <cstddef>
#include <vector>

#include "ink2tex/params.hpp"
#include "ink2tex/preprocess.hpp"
#include "ink2tex/tape.hpp"

namespace ink2tex {

/// Weights of one GRU direction: update gate, reset gate and candidate.
struct GruWeights {
  Var W_xz, W_xr, W_xh;
  Var U_hz, U_hr, U_rh;
};

GruWeights bind_encoder_gru(Tape& tape, const ModelParams& params, std::size_t layer, bool forward);

/// z = sig(W_xz x + U_hz h), r = sig(W_xr x + U_hr h), h~ = tanh(W_xh x + U_rh (r * h)),
/// h' = (1 - z) * h + z * h~.
Var gru_step(Var x, Var h_prev, const GruWeights& w);

/// Same step with the input projections (W_xz x, W_xr x, W_xh x) already applied.
Var gru_step_projected(Var xz, Var xr, Var xh, Var h_prev, const GruWeights& w);

/// Runs a forward GRU left to right and a backward GRU right to left, both from a zero
/// state, and concatenates their states per time step: T x c -> T x 2h.
Var bidirectional_layer(Var seq, const GruWeights& fwd, const GruWeights& bwd);

/// Element-wise reduction over non-overlapping windows of `stride` rows.
Var pool_time(Var seq, std::size_t stride, PoolMode mode = PoolMode::kMax);

/// Inclusive range of input point indices an annotation covers.
struct PointSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  friend bool operator==(const PointSpan&, const PointSpan&) = default;
};

/// Annotation length and coverage for an input of n points; depends on n and config only.
std::vector<PointSpan> annotation_spans(std::size_t n, const ModelConfig& config);

struct EncodedVar {
  Var annotations;  // L x D
  std::vector<PointSpan> point_span;
};

/// Stacked bidirectional encoder. A layer listed in `pooled_layers` sees its input pooled
/// first.
EncodedVar encode(Tape& tape, const ModelParams& params, Var features);
EncodedVar encode(Tape& tape, const ModelParams& params, const FeatureSequence& x);

struct AnnotationSequence {
  Tensor a;  // L x D
  std::vector<PointSpan> point_span;
};

AnnotationSequence encode(const ModelParams& params, const FeatureSequence& x);

/// N x 8 matrix of the feature rows.
Tensor feature_matrix(const FeatureSequence& x);

}  // namespace ink2tex
