#include "ink2tex/encoder.hpp"

#include <algorithm>

#include "ink2tex/errors.hpp"

namespace ink2tex {

GruWeights bind_encoder_gru(Tape& tape, const ModelParams& params, std::size_t layer, bool forward) {
  auto p = [&](const char* w) {
    const auto name = names::encoder(layer, forward, w);
    return tape.parameter(name, params.at(name));
  };
  return {p("W_xz"), p("W_xr"), p("W_xh"), p("U_hz"), p("U_hr"), p("U_rh")};
}

Var gru_step_projected(Var xz, Var xr, Var xh, Var h_prev, const GruWeights& w) {
  const Var z = sigmoid(add(xz, matvec(w.U_hz, h_prev)));
  const Var r = sigmoid(add(xr, matvec(w.U_hr, h_prev)));
  const Var candidate = tanh(add(xh, matvec(w.U_rh, mul(r, h_prev))));
  return gru_blend(z, h_prev, candidate);
}

Var gru_step(Var x, Var h_prev, const GruWeights& w) {
  return gru_step_projected(matvec(w.W_xz, x), matvec(w.W_xr, x), matvec(w.W_xh, x), h_prev, w);
}

namespace {

Var run_direction(Var seq, const GruWeights& w, bool forward) {
  Tape& tape = seq.tape();
  const std::size_t steps = seq.shape()[0];
  const std::size_t hidden = w.U_hz.shape()[0];
  // Input projections for all time steps at once.
  const Var xz = linear_rows(seq, w.W_xz);
  const Var xr = linear_rows(seq, w.W_xr);
  const Var xh = linear_rows(seq, w.W_xh);
  std::vector<Var> states(steps);
  Var h = tape.constant(Tensor({hidden}));
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = forward ? k : steps - 1 - k;
    h = gru_step_projected(row(xz, t), row(xr, t), row(xh, t), h, w);
    states[t] = h;
  }
  return stack_rows(states);
}

}  // namespace

Var bidirectional_layer(Var seq, const GruWeights& fwd, const GruWeights& bwd) {
  if (seq.value().rank() != 2 || seq.shape()[0] == 0) {
    throw DimensionError("bidirectional_layer expects a non-empty T x c matrix, got " + shape_string(seq.shape()));
  }
  return concat_cols(run_direction(seq, fwd, true), run_direction(seq, bwd, false));
}

Var pool_time(Var seq, std::size_t stride, PoolMode mode) { return pool_rows(seq, stride, mode); }

std::vector<PointSpan> annotation_spans(std::size_t n, const ModelConfig& config) {
  if (n == 0) throw DimensionError("annotation_spans: empty input");
  std::vector<PointSpan> spans(n);
  for (std::size_t i = 0; i < n; ++i) spans[i] = {i, i};
  for (std::size_t layer = 0; layer < config.encoder_layers; ++layer) {
    if (!config.is_pooled(layer) || config.pooling_stride == 1) continue;
    const std::size_t stride = config.pooling_stride;
    std::vector<PointSpan> pooled((spans.size() + stride - 1) / stride);
    for (std::size_t j = 0; j < pooled.size(); ++j) {
      const std::size_t last = std::min((j + 1) * stride, spans.size()) - 1;
      pooled[j] = {spans[j * stride].first, spans[last].last};
    }
    spans = std::move(pooled);
  }
  return spans;
}

EncodedVar encode(Tape& tape, const ModelParams& params, Var features) {
  const auto& config = params.config;
  if (features.value().rank() != 2 || features.shape()[1] != config.input_dim || features.shape()[0] == 0) {
    throw DimensionError("encode expects an N x " + std::to_string(config.input_dim) + " feature matrix, got " +
                         shape_string(features.shape()));
  }
  Var seq = features;
  for (std::size_t layer = 0; layer < config.encoder_layers; ++layer) {
    if (config.is_pooled(layer)) seq = pool_time(seq, config.pooling_stride, config.pooling_mode);
    seq = bidirectional_layer(seq, bind_encoder_gru(tape, params, layer, true),
                              bind_encoder_gru(tape, params, layer, false));
  }
  return {seq, annotation_spans(features.shape()[0], config)};
}

Tensor feature_matrix(const FeatureSequence& x) {
  Tensor m({x.size(), kFeatureDim});
  for (std::size_t i = 0; i < x.size(); ++i) std::copy(x.rows[i].begin(), x.rows[i].end(), m.data() + i * kFeatureDim);
  return m;
}

EncodedVar encode(Tape& tape, const ModelParams& params, const FeatureSequence& x) {
  if (x.size() == 0) throw DimensionError("encode: empty feature sequence");
  return encode(tape, params, tape.constant(feature_matrix(x)));
}

AnnotationSequence encode(const ModelParams& params, const FeatureSequence& x) {
  Tape tape(false);
  auto encoded = encode(tape, params, x);
  if (!encoded.annotations.value().all_finite()) throw Error("encoder produced non-finite annotations");
  return {encoded.annotations.value(), std::move(encoded.point_span)};
}

}  // namespace ink2tex
