#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "ink2tex/encoder.hpp"
#include "ink2tex/errors.hpp"

using namespace ink2tex;
using fixture::Rng;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double dot_row(const Tensor& m, std::size_t r, const std::vector<double>& v) {
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += m.at(r, k) * v[k];
  return acc;
}

// Scalar transliteration of the gate equations.
std::vector<double> oracle_gru(const ModelParams& p, std::size_t layer, bool fwd, const std::vector<double>& x,
                               const std::vector<double>& h) {
  auto W = [&](const char* n) -> const Tensor& { return p.at(names::encoder(layer, fwd, n)); };
  const std::size_t H = h.size();
  std::vector<double> z(H), r(H), rh(H), out(H);
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = sig(dot_row(W("W_xz"), i, x) + dot_row(W("U_hz"), i, h));
    r[i] = sig(dot_row(W("W_xr"), i, x) + dot_row(W("U_hr"), i, h));
  }
  for (std::size_t i = 0; i < H; ++i) rh[i] = r[i] * h[i];
  for (std::size_t i = 0; i < H; ++i) {
    const double cand = std::tanh(dot_row(W("W_xh"), i, x) + dot_row(W("U_rh"), i, rh));
    out[i] = (1.0 - z[i]) * h[i] + z[i] * cand;
  }
  return out;
}

Tensor run_step(const ModelParams& p, const Tensor& x, const Tensor& h) {
  Tape tape(false);
  const auto w = bind_encoder_gru(tape, p, 0, true);
  return gru_step(tape.constant(x), tape.constant(h), w).value();
}

Tensor run_layer(const ModelParams& p, const Tensor& seq, bool swap) {
  Tape tape(false);
  const auto f = bind_encoder_gru(tape, p, 0, !swap);
  const auto b = bind_encoder_gru(tape, p, 0, swap);
  return bidirectional_layer(tape.constant(seq), f, b).value();
}

ModelConfig cell_config(std::size_t hidden, std::size_t input = 8) {
  ModelConfig c = fixture::tiny_config();
  c.encoder_layers = 1;
  c.pooled_layers = {};
  c.encoder_hidden = hidden;
  c.input_dim = input;
  return c;
}

}  // namespace

TEST(GruStep, ZeroWeightsHalveState) {
  const ModelParams p = zero_params(cell_config(3));
  const Tensor h = Tensor::vector({1.0, -2.0, 4.0});
  const Tensor out = run_step(p, Tensor::vector({1, 2, 3, 4, 5, 6, 7, 8}), h);
  EXPECT_EQ(out, Tensor::vector({0.5, -1.0, 2.0}));
  EXPECT_EQ(run_step(p, Tensor::vector({1, 2, 3, 4, 5, 6, 7, 8}), Tensor({3})), Tensor({3}));
}

TEST(GruStep, MatchesScalarOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams p = fixture::random_params(cell_config(3), rng, 1.0);
    const Tensor x = fixture::random_tensor({8}, rng), h = fixture::random_tensor({3}, rng);
    const Tensor got = run_step(p, x, h);
    const auto want = oracle_gru(p, 0, true, {x.values().begin(), x.values().end()}, {h.values().begin(), h.values().end()});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
  }
}

TEST(GruStep, DimensionMismatchThrows) {
  const ModelParams p = zero_params(cell_config(3));
  EXPECT_THROW(run_step(p, Tensor::vector({1, 2}), Tensor({3})), DimensionError);
}

TEST(BidirectionalLayer, SingleStepIsOneStepEachWay) {
  Rng rng(2);
  const ModelParams p = fixture::random_params(cell_config(3), rng, 1.0);
  const Tensor seq = fixture::random_tensor({1, 8}, rng);
  const Tensor out = run_layer(p, seq, false);
  const std::vector<double> x(seq.values().begin(), seq.values().end()), zero(3, 0.0);
  const auto f = oracle_gru(p, 0, true, x, zero);
  const auto b = oracle_gru(p, 0, false, x, zero);
  ASSERT_EQ(out.shape(), (Shape{1, 6}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(out.at(0, i), f[i], 1e-14);
    EXPECT_NEAR(out.at(0, 3 + i), b[i], 1e-14);
  }
}

TEST(BidirectionalLayer, ReversalSymmetry) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = fixture::random_params(cell_config(4), rng, 1.0);
    const std::size_t T = fixture::uniform_index(rng, 1, 9);
    const Tensor seq = fixture::random_tensor({T, 8}, rng);
    Tensor reversed({T, 8});
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < 8; ++k) reversed.at(t, k) = seq.at(T - 1 - t, k);
    }
    const Tensor a = run_layer(p, seq, false);
    const Tensor b = run_layer(p, reversed, true);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(b.at(T - 1 - t, i), a.at(t, 4 + i));
        EXPECT_EQ(b.at(T - 1 - t, 4 + i), a.at(t, i));
      }
    }
  }
}

TEST(BidirectionalLayer, DefaultWidthIs500) {
  ModelConfig c;
  c.encoder_layers = 1;
  c.pooled_layers = {};
  c.vocab_size = 5;
  const ModelParams p = zero_params(c);
  Rng rng(4);
  EXPECT_EQ(run_layer(p, fixture::random_tensor({3, 8}, rng), false).shape(), (Shape{3, 500}));
}

TEST(PoolTime, StrideOneIsIdentity) {
  Rng rng(5);
  const Tensor m = fixture::random_tensor({5, 3}, rng);
  Tape tape(false);
  EXPECT_EQ(pool_time(tape.constant(m), 1).value(), m);
}

TEST(PoolTime, CeilingRuleAndWindowMax) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = fixture::uniform_index(rng, 1, 20), stride = fixture::uniform_index(rng, 1, 4);
    const Tensor m = fixture::random_tensor({T, 3}, rng);
    Tape tape(false);
    const Tensor out = pool_time(tape.constant(m), stride).value();
    const std::size_t rows = (T + stride - 1) / stride;
    ASSERT_EQ(out.shape(), (Shape{rows, 3}));
    for (std::size_t j = 0; j < rows; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        double best = -1e300;
        for (std::size_t t = j * stride; t < std::min(T, (j + 1) * stride); ++t) best = std::max(best, m.at(t, c));
        EXPECT_EQ(out.at(j, c), best);
      }
    }
  }
  const Tensor five = fixture::random_tensor({5, 2}, rng);
  Tape tape(false);
  const Tensor out = pool_time(tape.constant(five), 2).value();
  EXPECT_EQ(out.at(2, 0), five.at(4, 0));
  EXPECT_EQ(out.at(2, 1), five.at(4, 1));
}

TEST(Encode, DefaultLengths) {
  ModelConfig c;
  c.vocab_size = 5;
  const ModelParams p = zero_params(c);
  Rng rng(7);
  const auto a = encode(p, fixture::random_features(8, rng));
  EXPECT_EQ(a.a.shape(), (Shape{2, 500}));
  const auto one = encode(p, fixture::random_features(1, rng));
  EXPECT_EQ(one.a.shape(), (Shape{1, 500}));
  EXPECT_EQ(one.point_span, (std::vector<PointSpan>{{0, 0}}));
  EXPECT_EQ(annotation_spans(7, c), (std::vector<PointSpan>{{0, 3}, {4, 6}}));
}

TEST(Encode, SpansDependOnlyOnLength) {
  Rng rng(8);
  const ModelConfig c = fixture::tiny_config();
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = fixture::random_params(c, rng);
    const std::size_t n = fixture::uniform_index(rng, 1, 12);
    const auto a = encode(p, fixture::random_features(n, rng));
    EXPECT_EQ(a.point_span, annotation_spans(n, c));
    EXPECT_EQ(a.a.rows(), a.point_span.size());
    for (double v : a.a.values()) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_LT(std::abs(v), 1.0);
    }
  }
}

TEST(Encode, Deterministic) {
  Rng rng(9);
  const ModelConfig c = fixture::tiny_config();
  const ModelParams p = fixture::random_params(c, rng);
  const auto x = fixture::random_features(9, rng);
  EXPECT_EQ(encode(p, x).a, encode(p, x).a);
}

TEST(Encode, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  const ModelConfig c = fixture::tiny_config();
  const ModelParams p = fixture::random_params(c, rng);
  const auto x = fixture::random_features(6, rng);
  const auto spans = annotation_spans(6, c);
  const Tensor proj = fixture::random_tensor({spans.size(), c.annotation_dim()}, rng);
  const auto report = fixture::check_gradients(
      [&](Tape& t, const ModelParams& q) { return sum(mul(encode(t, q, x).annotations, t.constant(proj))); }, p,
      1e-4);
  EXPECT_TRUE(report.failures.empty()) << report.max_rel_error;
  EXPECT_GT(report.checked, 0u);
}
