#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "ink2tex/decoder.hpp"
#include "ink2tex/errors.hpp"
#include "ink2tex/model.hpp"
#include "ink2tex/vocabulary.hpp"

using namespace ink2tex;
using fixture::Rng;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::vector<double> mv(const Tensor& m, const std::vector<double>& v) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < v.size(); ++k) out[i] += m.at(i, k) * v[k];
  }
  return out;
}

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

struct OracleStep {
  std::vector<double> s;
  std::vector<double> p;
};

// Scalar transliteration of the decoder gates and output layer.
OracleStep oracle_step(const ModelParams& P, TokenId y, const std::vector<double>& s, const std::vector<double>& c) {
  const Tensor& E = P.at("embedding.E");
  std::vector<double> e(E.cols());
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = E.at(y, k);
  const auto a = [&](const char* W, const std::vector<double>& v) { return mv(P.at(W), v); };
  const std::size_t n = s.size();
  const auto zy = a("decoder.W_yz", e), zs = a("decoder.U_sz", s), zc = a("decoder.C_cz", c);
  const auto ry = a("decoder.W_yr", e), rs = a("decoder.U_sr", s), rc = a("decoder.C_cr", c);
  std::vector<double> z(n), r(n), rsv(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = sig(zy[i] + zs[i] + zc[i]);
    r[i] = sig(ry[i] + rs[i] + rc[i]);
    rsv[i] = r[i] * s[i];
  }
  const auto hy = a("decoder.W_ys", e), hs = a("decoder.U_rs", rsv), hc = a("decoder.C_cs", c);
  OracleStep out;
  out.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.s[i] = (1 - z[i]) * s[i] + z[i] * std::tanh(hy[i] + hs[i] + hc[i]);
  const auto ws = a("output.W_s", out.s), wc = a("output.W_c", c);
  std::vector<double> read(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) read[k] = e[k] + ws[k] + wc[k];
  const auto logits = a("output.W_o", read);
  double mx = -1e300, z_sum = 0.0;
  for (double l : logits) mx = std::max(mx, l);
  for (double l : logits) z_sum += std::exp(l - mx);
  for (double l : logits) out.p.push_back(std::exp(l - mx) / z_sum);
  return out;
}

std::vector<TokenId> random_target(Rng& rng, std::size_t K, std::size_t len) {
  std::vector<TokenId> y;
  for (std::size_t i = 0; i + 1 < len; ++i) y.push_back(fixture::uniform_index(rng, Vocabulary::kReserved, K - 1));
  y.push_back(Vocabulary::kEnd);
  return y;
}

}  // namespace

TEST(DecodeStep, ZeroWeights) {
  const ModelConfig c = fixture::tiny_config();
  const ModelParams p = zero_params(c);
  Rng rng(1);
  const Tensor s = fixture::random_tensor({c.decoder_hidden}, rng);
  const auto step = decode_step(p, 3, s, fixture::random_tensor({c.annotation_dim()}, rng));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(step.s[i], 0.5 * s[i]);
  for (double v : step.y_dist.values()) EXPECT_EQ(v, 1.0 / static_cast<double>(c.vocab_size));
}

TEST(DecodeStep, EqualOutputRowsGiveHalfHalf) {
  ModelConfig c = fixture::tiny_config(2);
  Rng rng(2);
  ModelParams p = fixture::random_params(c, rng);
  Tensor& wo = p.at("output.W_o");
  for (std::size_t k = 0; k < wo.cols(); ++k) wo.at(1, k) = wo.at(0, k);
  const auto step = decode_step(p, 1, fixture::random_tensor({c.decoder_hidden}, rng),
                                fixture::random_tensor({c.annotation_dim()}, rng));
  EXPECT_EQ(step.y_dist, Tensor::vector({0.5, 0.5}));
}

TEST(DecodeStep, MatchesScalarOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelConfig c = fixture::tiny_config();
    const ModelParams p = fixture::random_params(c, rng, 1.0);
    const TokenId y = fixture::uniform_index(rng, 0, c.vocab_size - 1);
    const Tensor s = fixture::random_tensor({c.decoder_hidden}, rng);
    const Tensor ctx = fixture::random_tensor({c.annotation_dim()}, rng);
    const auto got = decode_step(p, y, s, ctx);
    const auto want = oracle_step(p, y, vals(s), vals(ctx));
    for (std::size_t i = 0; i < want.s.size(); ++i) EXPECT_NEAR(got.s[i], want.s[i], 1e-14);
    double total = 0.0;
    for (std::size_t k = 0; k < want.p.size(); ++k) {
      EXPECT_NEAR(got.y_dist[k], want.p[k], 1e-14);
      total += got.y_dist[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(DecodeStep, TokenOutOfRange) {
  const ModelConfig c = fixture::tiny_config();
  const ModelParams p = zero_params(c);
  EXPECT_THROW(decode_step(p, c.vocab_size, Tensor({c.decoder_hidden}), Tensor({c.annotation_dim()})),
               DimensionError);
}

TEST(DecodeStep, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const ModelConfig c = fixture::tiny_config();
  ModelParams p = fixture::random_params(c, rng, 1.0);
  p.tensors["input.s"] = fixture::random_tensor({c.decoder_hidden}, rng);
  p.tensors["input.c"] = fixture::random_tensor({c.annotation_dim()}, rng);
  const Tensor proj = fixture::random_tensor({c.decoder_hidden}, rng);
  const auto report = fixture::check_gradients(
      [&](Tape& t, const ModelParams& q) {
        const auto w = bind_decoder(t, q);
        const auto step = decode_step(2, t.parameter("input.s", q.at("input.s")),
                                      t.parameter("input.c", q.at("input.c")), w);
        return add(cross_entropy(step.logits, 4), sum(mul(step.state, t.constant(proj))));
      },
      p, 1e-4,
      {"embedding.E", "decoder.W_yz", "decoder.W_yr", "decoder.W_ys", "decoder.U_sz", "decoder.U_sr",
       "decoder.U_rs", "decoder.C_cz", "decoder.C_cr", "decoder.C_cs", "output.W_o", "output.W_s", "output.W_c",
       "input.s", "input.c"});
  EXPECT_TRUE(report.failures.empty()) << report.max_rel_error;
}

TEST(InitState, Rules) {
  Rng rng(5);
  const ModelConfig c = fixture::tiny_config();
  ModelParams p = fixture::random_params(c, rng);
  const Tensor a = fixture::random_tensor({4, c.annotation_dim()}, rng);
  Tensor permuted({4, c.annotation_dim()});
  const std::size_t order[] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) permuted.at(i, k) = a.at(order[i], k);
  }
  const Tensor s0 = init_state(p, a), s1 = init_state(p, permuted);
  for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(s0[i], s1[i], 1e-15);

  const Tensor single = fixture::random_tensor({1, c.annotation_dim()}, rng);
  const Tensor s = init_state(p, single);
  const auto want = mv(p.at("decoder.W_init"), vals(single));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], std::tanh(want[i]), 1e-15);

  p.at("decoder.W_init").fill(0.0);
  EXPECT_EQ(init_state(p, a), Tensor({c.decoder_hidden}));
}

TEST(SequenceLoss, UniformModelGivesCLogK) {
  const ModelConfig c = fixture::tiny_config(6);
  const ModelParams p = zero_params(c);
  Rng rng(6);
  const auto x = fixture::random_features(5, rng);
  const std::vector<TokenId> y = {3, 4, 5, Vocabulary::kEnd};
  EXPECT_NEAR(sequence_loss(p, x, y), 4.0 * std::log(6.0), 1e-12);
}

TEST(SequenceLoss, MatchesStepwiseOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelConfig c = fixture::tiny_config(6);
    const ModelParams p = fixture::random_params(c, rng, 1.0);
    const auto x = fixture::random_features(fixture::uniform_index(rng, 1, 9), rng);
    const auto y = random_target(rng, c.vocab_size, fixture::uniform_index(rng, 1, 5));

    const auto a = encode(p, x);
    Tensor s = init_state(p, a.a);
    AttentionState state = AttentionState::initial(a.a.rows());
    TokenId prev = Vocabulary::kStart;
    double want = 0.0;
    for (TokenId target : y) {
      const auto att = attend(p, s, a.a, state);
      const auto step = oracle_step(p, prev, vals(s), vals(att.context));
      want -= std::log(step.p[target]);
      s = Tensor::vector(step.s);
      state = att.state;
      prev = target;
    }
    const double got = sequence_loss(p, x, y);
    EXPECT_NEAR(got, want, 1e-11 * std::max(1.0, want));
    EXPECT_GE(got, 0.0);
  }
}

TEST(SequenceLoss, RejectsBadTargets) {
  const ModelConfig c = fixture::tiny_config();
  const ModelParams p = zero_params(c);
  Rng rng(8);
  const auto x = fixture::random_features(3, rng);
  EXPECT_THROW(sequence_loss(p, x, std::vector<TokenId>{}), ContractError);
  EXPECT_THROW(sequence_loss(p, x, std::vector<TokenId>{3, 4}), ContractError);
}

TEST(SequenceLoss, FullGradientMatchesFiniteDifferences) {
  Rng rng(9);
  ModelConfig c = fixture::tiny_config(5);
  c.decoder_hidden = 4;
  c.embedding_dim = 4;
  c.attention_dim = 4;
  const ModelParams p = fixture::random_params(c, rng, 0.8);
  const auto x = fixture::random_features(6, rng);
  const std::vector<TokenId> y = {3, 4, Vocabulary::kEnd};
  const auto report = fixture::check_gradients(
      [&](Tape& t, const ModelParams& q) { return sequence_loss(t, q, x, y); }, p, 1e-4);
  EXPECT_TRUE(report.failures.empty()) << report.max_rel_error;
  EXPECT_EQ(report.checked, p.parameter_count());
}

TEST(SequenceDecoder, StepsMatchValueFunctions) {
  Rng rng(10);
  const ModelConfig c = fixture::tiny_config();
  const ModelParams p = fixture::random_params(c, rng, 1.0);
  const auto x = fixture::random_features(7, rng);
  const SequenceDecoder dec(p, x);
  const auto a = encode(p, x);
  EXPECT_EQ(dec.annotations().a, a.a);
  auto st = dec.initial();
  Tensor s = init_state(p, a.a);
  AttentionState att = AttentionState::initial(a.a.rows());
  TokenId prev = Vocabulary::kStart;
  for (int t = 0; t < 4; ++t) {
    const auto [next, probs] = dec.step(st, prev);
    const auto r = attend(p, s, a.a, att);
    const auto d = decode_step(p, prev, s, r.context);
    for (std::size_t k = 0; k < probs.size(); ++k) EXPECT_NEAR(probs[k], d.y_dist[k], 1e-13);
    st = next;
    s = d.s;
    att = r.state;
    prev = 3 + static_cast<TokenId>(t % 3);
  }
}
