#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "ink2tex/errors.hpp"
#include "ink2tex/model_io.hpp"
#include "ink2tex/params.hpp"
#include "ink2tex/tape.hpp"
#include "ink2tex/tensor.hpp"

using namespace ink2tex;
using fixture::Rng;

namespace {

// out[i][o] = sum_k sum_c s[i + k - w/2][c] * f[k][c][o]
Tensor brute_conv(const Tensor& s, const Tensor& f) {
  const std::size_t L = s.shape()[0], cin = s.shape()[1];
  const std::size_t w = f.shape()[0], cout = f.shape()[2];
  Tensor out({L, cout});
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t o = 0; o < cout; ++o) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w; ++k) {
        const long src = static_cast<long>(i + k) - static_cast<long>(w / 2);
        if (src < 0 || src >= static_cast<long>(L)) continue;
        for (std::size_t c = 0; c < cin; ++c) acc += s.at(src, c) * f[(k * cin + c) * cout + o];
      }
      out.at(i, o) = acc;
    }
  }
  return out;
}

/// Wraps a tape op into a scalar by a fixed random projection, leaves named "a", "b".
ModelParams leaves(std::initializer_list<std::pair<std::string, Tensor>> items) {
  ModelParams p;
  for (auto& [k, v] : items) p.tensors.emplace(k, v);
  return p;
}

Var project(Tape& tape, Var y, const Tensor& weights) { return sum(mul(y, tape.constant(weights))); }

}  // namespace

TEST(Kernels, ScalarIdentities) {
  EXPECT_EQ(kernels::sigmoid(0.0), 0.5);
  EXPECT_EQ(kernels::tanh(Tensor::vector({0.0}))[0], 0.0);
  const Tensor s = kernels::softmax(Tensor::vector({0.0, 0.0}));
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[1], 0.5);
  EXPECT_TRUE(std::isfinite(kernels::sigmoid(-1000.0)));
  EXPECT_TRUE(std::isfinite(kernels::sigmoid(1000.0)));
}

TEST(Kernels, SoftmaxSumsToOne) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const Tensor x = fixture::random_tensor({fixture::uniform_index(rng, 1, 30)}, rng, 50.0);
    const Tensor p = kernels::softmax(x);
    double total = 0.0;
    for (double v : p.values()) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Kernels, MatmulMatchesLoops) {
  Rng rng(2);
  const Tensor a = fixture::random_tensor({3, 4}, rng), b = fixture::random_tensor({4, 5}, rng);
  const Tensor c = kernels::matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 4; ++k) acc += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), acc, 1e-14);
    }
  }
  const Tensor x = fixture::random_tensor({4}, rng);
  const Tensor y = kernels::matvec(a, x);
  const Tensor yt = kernels::matvec_transposed(b, x);
  for (std::size_t i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 4; ++k) acc += a.at(i, k) * x[k];
    EXPECT_NEAR(y[i], acc, 1e-14);
  }
  for (std::size_t j = 0; j < 5; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 4; ++k) acc += b.at(k, j) * x[k];
    EXPECT_NEAR(yt[j], acc, 1e-14);
  }
}

TEST(Kernels, ShapeMismatchNamesBothShapes) {
  try {
    kernels::matmul(Tensor({2, 3}), Tensor({4, 5}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2"), std::string::npos);
    EXPECT_NE(msg.find("4"), std::string::npos);
    EXPECT_NE(msg.find(shape_string({2, 3})), std::string::npos) << msg;
    EXPECT_NE(msg.find(shape_string({4, 5})), std::string::npos) << msg;
  }
  EXPECT_THROW(kernels::add(Tensor({2}), Tensor({3})), DimensionError);
  EXPECT_THROW(kernels::embed(Tensor({3, 2}), 3), DimensionError);
}

TEST(Kernels, ConvImpulseReproducesFilter) {
  Rng rng(3);
  const std::size_t L = 9, w = 5, q = 3;
  const Tensor f = fixture::random_tensor({w, 1, q}, rng);
  const std::size_t p = 4;
  Tensor s({L, 1});
  s.at(p, 0) = 1.0;
  const Tensor out = kernels::conv1d(s, f);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t o = 0; o < q; ++o) {
      const long k = static_cast<long>(p) - static_cast<long>(i) + static_cast<long>(w / 2);
      const double expected = (k >= 0 && k < static_cast<long>(w)) ? f[static_cast<std::size_t>(k) * q + o] : 0.0;
      EXPECT_EQ(out.at(i, o), expected);
    }
  }
}

TEST(Kernels, ConvMatchesBruteForce) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t L = fixture::uniform_index(rng, 1, 15);
    const std::size_t w = 2 * fixture::uniform_index(rng, 0, 5) + 1;
    const std::size_t cin = fixture::uniform_index(rng, 1, 3), cout = fixture::uniform_index(rng, 1, 4);
    const Tensor s = fixture::random_tensor({L, cin}, rng), f = fixture::random_tensor({w, cin, cout}, rng);
    const Tensor got = kernels::conv1d(s, f), want = brute_conv(s, f);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
  EXPECT_THROW(kernels::conv1d(Tensor({3, 1}), Tensor({4, 1, 2})), DimensionError);
}

TEST(Tape, SumGradientIsOnes) {
  const Tensor w = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tape tape;
  const Var p = tape.parameter("w", w);
  tape.backward(sum(p));
  const Tensor g = tape.grad(p);
  for (double v : g.values()) EXPECT_EQ(v, 1.0);
}

TEST(Tape, UnusedParameterGetsExactZero) {
  std::map<std::string, Tensor> params{{"used", Tensor::vector({1, 2})}, {"unused", Tensor::vector({3, 4})}};
  Tape tape;
  const Var u = tape.parameter("used", params["used"]);
  tape.parameter("unused", params["unused"]);
  tape.backward(sum(mul(u, u)));
  const auto grads = tape.parameter_gradients(params);
  EXPECT_EQ(grads.at("unused"), Tensor::vector({0, 0}));
  EXPECT_EQ(grads.at("used"), Tensor::vector({2, 4}));
}

TEST(Tape, NonScalarLossIsContractError) {
  const Tensor w = Tensor::vector({1, 2});
  Tape tape;
  EXPECT_THROW(tape.backward(tape.parameter("w", w)), ContractError);
}

TEST(Tape, OpGradientsMatchFiniteDifferences) {
  Rng rng(5);
  const Tensor proj3 = fixture::random_tensor({3}, rng);
  const Tensor m43 = fixture::random_tensor({4, 3}, rng), v3 = fixture::random_tensor({3}, rng);
  const Tensor v4 = fixture::random_tensor({4}, rng), v3b = fixture::random_tensor({3}, rng);
  const Tensor v3c = fixture::random_tensor({3}, rng), w23 = fixture::random_tensor({2, 3}, rng);
  const Tensor proj42 = fixture::random_tensor({4, 2}, rng), proj62 = fixture::random_tensor({6, 2}, rng);
  const Tensor proj45 = fixture::random_tensor({4, 5}, rng), proj41 = fixture::random_tensor({4, 1}, rng);
  const Tensor proj33 = fixture::random_tensor({3, 3}, rng), sig61 = fixture::random_tensor({6, 1}, rng);
  const Tensor filt = fixture::random_tensor({3, 1, 2}, rng), m42 = fixture::random_tensor({4, 2}, rng);
  const Tensor m53 = fixture::random_tensor({5, 3}, rng);

  struct Case {
    const char* name;
    ModelParams params;
    fixture::ScalarFn fn;
  };
  std::vector<Case> cases = {
      {"matvec", leaves({{"a", m43}, {"b", v3}}),
       [&](Tape& t, const ModelParams& p) {
         return project(t, matvec(t.parameter("a", p.at("a")), t.parameter("b", p.at("b"))),
                        Tensor::vector({1, -2, 3, 0.5}));
       }},
      {"matvec_transposed", leaves({{"a", m43}, {"b", v4}}),
       [&](Tape& t, const ModelParams& p) {
         return project(t, matvec_transposed(t.parameter("a", p.at("a")), t.parameter("b", p.at("b"))), proj3);
       }},
      {"linear_rows", leaves({{"a", m43}, {"b", w23}}),
       [&](Tape& t, const ModelParams& p) {
         return sum(mul(linear_rows(t.parameter("a", p.at("a")), t.parameter("b", p.at("b"))),
                        t.constant(proj42)));
       }},
      {"sigmoid_tanh_mul", leaves({{"a", v3}, {"b", v3b}}),
       [&](Tape& t, const ModelParams& p) {
         const Var a = t.parameter("a", p.at("a")), b = t.parameter("b", p.at("b"));
         return project(t, mul(sigmoid(a), tanh(sub(b, scale(a, 0.3)))), proj3);
       }},
      {"softmax", leaves({{"a", v3}}),
       [&](Tape& t, const ModelParams& p) { return project(t, softmax(t.parameter("a", p.at("a"))), proj3); }},
      {"cross_entropy", leaves({{"a", v4}}),
       [&](Tape& t, const ModelParams& p) { return cross_entropy(t.parameter("a", p.at("a")), 2); }},
      {"conv1d", leaves({{"a", sig61}, {"b", filt}}),
       [&](Tape& t, const ModelParams& p) {
         return sum(mul(conv1d(t.parameter("a", p.at("a")), t.parameter("b", p.at("b"))),
                        t.constant(proj62)));
       }},
      {"embed", leaves({{"a", m43}}),
       [&](Tape& t, const ModelParams& p) { return project(t, embed(t.parameter("a", p.at("a")), 1), proj3); }},
      {"gru_blend", leaves({{"a", v3}, {"b", v3b}, {"c", v3c}}),
       [&](Tape& t, const ModelParams& p) {
         return project(t, gru_blend(t.parameter("a", p.at("a")), t.parameter("b", p.at("b")),
                                     t.parameter("c", p.at("c"))),
                        proj3);
       }},
      {"rows_stack_concat", leaves({{"a", m43}, {"b", m42}}),
       [&](Tape& t, const ModelParams& p) {
         const Var a = t.parameter("a", p.at("a"));
         const std::vector<Var> rows = {row(a, 3), row(a, 0), row(a, 1), row(a, 2)};
         const Var c = concat_cols(stack_rows(rows), t.parameter("b", p.at("b")));
         return sum(mul(c, t.constant(proj45)));
       }},
      {"add_rowwise_mean", leaves({{"a", m43}, {"b", v3}}),
       [&](Tape& t, const ModelParams& p) {
         return project(t, mean_rows(add_rowwise(t.parameter("a", p.at("a")), t.parameter("b", p.at("b")))), proj3);
       }},
      {"as_column", leaves({{"a", v4}}),
       [&](Tape& t, const ModelParams& p) {
         return sum(mul(as_column(t.parameter("a", p.at("a"))), t.constant(proj41)));
       }},
  };
  for (PoolMode mode : {PoolMode::kMax, PoolMode::kMean, PoolMode::kSubsample}) {
    // 5 rows at stride 2 pool to 3 rows, the last window holding a single row
    cases.push_back({"pool_rows", leaves({{"a", m53}}), [&, mode](Tape& t, const ModelParams& p) {
                       return sum(mul(pool_rows(t.parameter("a", p.at("a")), 2, mode), t.constant(proj33)));
                     }});
  }
  for (const auto& c : cases) {
    const auto report = fixture::check_gradients(c.fn, c.params, 1e-6);
    EXPECT_TRUE(report.failures.empty()) << c.name << " max rel error " << report.max_rel_error;
    EXPECT_GT(report.checked, 0u) << c.name;
  }
}

TEST(Params, TableMatchesClosedFormCount) {
  ModelConfig c;
  c.vocab_size = 111;
  const std::size_t h = 250, n = 256, m = 256, na = 500, D = 500, K = 111, w = 11, q = 5;
  std::size_t encoder = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    const std::size_t in = l == 0 ? 8 : D;
    encoder += 2 * (3 * h * in + 3 * h * h);
  }
  const std::size_t decoder = 3 * n * m + 3 * n * n + 3 * n * D + n * D;
  const std::size_t output = K * m + K * m + m * n + m * D;
  const std::size_t attention = na + na * n + na * D + w * q + na * q;
  const ModelParams p = zero_params(c);
  EXPECT_EQ(p.parameter_count(), encoder + decoder + output + attention);
}

TEST(Params, EveryGateMatrixExistsOnce) {
  ModelConfig c = fixture::tiny_config();
  const auto table = parameter_table(c);
  std::set<std::string> names;
  for (const auto& s : table) EXPECT_TRUE(names.insert(s.name).second) << s.name;
  for (const char* w : {"W_xz", "W_xr", "W_xh", "U_hz", "U_hr", "U_rh"}) {
    for (std::size_t l = 0; l < c.encoder_layers; ++l) {
      EXPECT_TRUE(names.contains(names::encoder(l, true, w)));
      EXPECT_TRUE(names.contains(names::encoder(l, false, w)));
    }
  }
  for (const char* k : {"decoder.W_yz", "decoder.W_yr", "decoder.W_ys", "decoder.U_sz", "decoder.U_sr",
                        "decoder.U_rs", "decoder.C_cz", "decoder.C_cr", "decoder.C_cs", "decoder.W_init",
                        "output.W_o", "output.W_s", "output.W_c", "embedding.E", "attention.nu_att",
                        "attention.W_att", "attention.U_att", "attention.U_f", "attention.Q"}) {
    EXPECT_TRUE(names.contains(k)) << k;
  }
  c.coverage = false;
  for (const auto& s : parameter_table(c)) EXPECT_EQ(s.name.find("attention.Q"), std::string::npos);
}

TEST(Params, InitIsSeededAndOrthogonal) {
  ModelConfig c = fixture::tiny_config();
  EXPECT_EQ(init_params(c, 3), init_params(c, 3));
  EXPECT_NE(init_params(c, 3), init_params(c, 4));
  const ModelParams p = init_params(c, 3);
  const Tensor& u = p.at(names::encoder(0, true, "U_hz"));
  const std::size_t h = u.rows();
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < h; ++k) dot += u.at(i, k) * u.at(j, k);
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
    }
  }
  const Tensor& wx = p.at(names::encoder(0, true, "W_xz"));
  const double bound = std::sqrt(6.0 / static_cast<double>(wx.rows() + wx.cols()));
  for (double v : wx.values()) EXPECT_LE(std::abs(v), bound);
}

TEST(Params, ValidateRejectsBadConfigs) {
  ModelConfig c = fixture::tiny_config();
  c.pooled_layers = {5};
  EXPECT_THROW(validate(c), ConfigError);
  c = fixture::tiny_config();
  c.coverage_width = 4;
  EXPECT_THROW(validate(c), ConfigError);
  c = fixture::tiny_config();
  c.vocab_size = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = fixture::tiny_config();
  c.vocabulary = {"<s>", "</s>"};
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_NO_THROW(validate(fixture::tiny_config()));
}

TEST(Params, ConfigJsonRoundTrip) {
  ModelConfig c = fixture::tiny_config();
  c.vocabulary = {"<s>", "</s>", "<unk>", "x", "y", "z"};
  c.pooling_mode = PoolMode::kMean;
  EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(ModelIo, RoundTripIsBitExact) {
  ModelConfig c = fixture::tiny_config();
  const ModelParams p = init_params(c, 9);
  std::stringstream ss;
  save_model(p, ss);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 7), "INK2TEX");
  std::stringstream in(bytes);
  const ModelParams back = load_model(in);
  ASSERT_EQ(back, p);
  for (const auto& [name, t] : p.tensors) {
    EXPECT_EQ(std::memcmp(t.data(), back.at(name).data(), t.size() * sizeof(double)), 0) << name;
  }
  std::stringstream again;
  save_model(back, again);
  EXPECT_EQ(again.str(), bytes);
}

TEST(ModelIo, TruncatedFileIsRejected) {
  const ModelParams p = init_params(fixture::tiny_config(), 9);
  std::stringstream ss;
  save_model(p, ss);
  const std::string bytes = ss.str();
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
    std::stringstream in(bytes.substr(0, cut));
    EXPECT_THROW(load_model(in), ModelFormatError) << cut;
  }
  std::stringstream extra(bytes + "x");
  EXPECT_THROW(load_model(extra), ModelFormatError);
}

TEST(ModelIo, VersionAndMagicChecked) {
  const ModelParams p = init_params(fixture::tiny_config(), 9);
  std::stringstream ss;
  save_model(p, ss);
  std::string bytes = ss.str();
  std::string bad_version = bytes;
  bad_version[7] = 9;
  std::stringstream v(bad_version);
  EXPECT_THROW(load_model(v), VersionMismatchError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream m(bad_magic);
  EXPECT_THROW(load_model(m), ModelFormatError);
}

TEST(ModelIo, LayerCountMismatchNamesKey) {
  ModelConfig two = fixture::tiny_config();
  ModelConfig four = two;
  four.encoder_layers = 4;
  std::stringstream ss;
  save_model(init_params(two, 1), ss);
  try {
    load_model(ss, &four);
    FAIL();
  } catch (const MissingKeyError& e) {
    EXPECT_EQ(e.key(), names::encoder(2, true, "W_xz"));
  }
}

TEST(ModelIo, ShapeMismatchNamesKey) {
  ModelConfig small = fixture::tiny_config();
  ModelConfig wider = small;
  wider.decoder_hidden = 7;
  std::stringstream ss;
  save_model(init_params(small, 1), ss);
  try {
    load_model(ss, &wider);
    FAIL();
  } catch (const ShapeMismatchError& e) {
    EXPECT_FALSE(e.key().empty());
    EXPECT_NE(std::string(e.what()).find(e.key()), std::string::npos);
  }
}
