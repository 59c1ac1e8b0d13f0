#include "ink2tex/params.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <random>

#include "ink2tex/errors.hpp"

namespace ink2tex {
namespace {

using nlohmann::json;

const char* pool_mode_name(PoolMode mode) {
  switch (mode) {
    case PoolMode::kMax: return "max";
    case PoolMode::kMean: return "mean";
    case PoolMode::kSubsample: return "subsample";
  }
  return "max";
}

PoolMode pool_mode_from(const std::string& s) {
  if (s == "max") return PoolMode::kMax;
  if (s == "mean") return PoolMode::kMean;
  if (s == "subsample") return PoolMode::kSubsample;
  throw ConfigError("unknown pooling mode '" + s + "'");
}

// Orthogonal matrix via modified Gram-Schmidt on a Gaussian matrix.
void fill_orthogonal(Tensor& t, std::mt19937_64& rng) {
  const std::size_t rows = t.shape()[0], cols = t.shape()[1];
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool transpose = rows < cols;
  const std::size_t n = transpose ? cols : rows;  // vectors length
  const std::size_t k = transpose ? rows : cols;  // number of vectors
  std::vector<std::vector<double>> basis(k, std::vector<double>(n));
  for (auto& v : basis) {
    for (auto& x : v) x = normal(rng);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t e = 0; e < n; ++e) dot += basis[i][e] * basis[j][e];
      for (std::size_t e = 0; e < n; ++e) basis[i][e] -= dot * basis[j][e];
    }
    double norm = 0.0;
    for (double x : basis[i]) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : basis[i]) x /= norm;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t.at(r, c) = transpose ? basis[r][c] : basis[c][r];
  }
}

void fill_uniform(Tensor& t, double fan_in, double fan_out, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> uniform(-s, s);
  for (auto& v : t.values()) v = uniform(rng);
}

}  // namespace

bool ModelConfig::is_pooled(std::size_t layer) const {
  return std::find(pooled_layers.begin(), pooled_layers.end(), layer) != pooled_layers.end();
}

void validate(const ModelConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid model config: " + what);
  };
  require(c.input_dim > 0, "input_dim must be positive");
  require(c.encoder_layers > 0, "encoder_layers must be positive");
  require(c.encoder_hidden > 0, "encoder_hidden must be positive");
  require(c.pooling_stride > 0, "pooling_stride must be positive");
  for (auto l : c.pooled_layers) require(l < c.encoder_layers, "pooled layer " + std::to_string(l) + " does not exist");
  require(c.decoder_hidden > 0 && c.embedding_dim > 0 && c.attention_dim > 0, "decoder sizes must be positive");
  require(c.vocab_size > 0, "vocab_size must be positive");
  require(c.vocabulary.empty() || c.vocabulary.size() == c.vocab_size, "vocabulary length differs from vocab_size");
  if (c.coverage) {
    require(c.coverage_width % 2 == 1, "coverage_width must be odd");
    require(c.coverage_channels > 0, "coverage_channels must be positive");
  }
}

std::string to_json(const ModelConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["encoder_layers"] = c.encoder_layers;
  j["encoder_hidden"] = c.encoder_hidden;
  j["pooled_layers"] = c.pooled_layers;
  j["pooling_stride"] = c.pooling_stride;
  j["pooling_mode"] = pool_mode_name(c.pooling_mode);
  j["decoder_hidden"] = c.decoder_hidden;
  j["embedding_dim"] = c.embedding_dim;
  j["attention_dim"] = c.attention_dim;
  j["annotation_dim"] = c.annotation_dim();
  j["vocab_size"] = c.vocab_size;
  j["coverage"] = c.coverage;
  j["coverage_width"] = c.coverage_width;
  j["coverage_channels"] = c.coverage_channels;
  j["vocabulary"] = c.vocabulary;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
    c.pooled_layers = j.at("pooled_layers").get<std::vector<std::size_t>>();
    c.pooling_stride = j.at("pooling_stride").get<std::size_t>();
    c.pooling_mode = pool_mode_from(j.at("pooling_mode").get<std::string>());
    c.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.attention_dim = j.at("attention_dim").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.coverage = j.at("coverage").get<bool>();
    c.coverage_width = j.at("coverage_width").get<std::size_t>();
    c.coverage_channels = j.at("coverage_channels").get<std::size_t>();
    c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    if (j.at("annotation_dim").get<std::size_t>() != c.annotation_dim()) {
      throw ConfigError("annotation_dim must equal 2 * encoder_hidden");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  validate(c);
  return c;
}

namespace names {
std::string encoder(std::size_t layer, bool forward, const char* weight) {
  return "encoder.layer" + std::to_string(layer) + (forward ? ".fwd." : ".bwd.") + weight;
}
}  // namespace names

std::vector<ParamSpec> parameter_table(const ModelConfig& c) {
  validate(c);
  std::vector<ParamSpec> table;
  const std::size_t h = c.encoder_hidden;
  for (std::size_t layer = 0; layer < c.encoder_layers; ++layer) {
    const std::size_t in = layer == 0 ? c.input_dim : 2 * h;
    for (bool fwd : {true, false}) {
      for (const char* w : {"W_xz", "W_xr", "W_xh"}) table.push_back({names::encoder(layer, fwd, w), {h, in}, ParamKind::kInput});
      for (const char* u : {"U_hz", "U_hr", "U_rh"}) table.push_back({names::encoder(layer, fwd, u), {h, h}, ParamKind::kRecurrent});
    }
  }
  const std::size_t n = c.decoder_hidden, m = c.embedding_dim, d = c.annotation_dim(), na = c.attention_dim;
  const std::size_t k = c.vocab_size;
  table.push_back({names::kEmbedding, {k, m}, ParamKind::kInput});
  for (const char* w : {"decoder.W_yz", "decoder.W_yr", "decoder.W_ys"}) table.push_back({w, {n, m}, ParamKind::kInput});
  for (const char* u : {"decoder.U_sz", "decoder.U_sr", "decoder.U_rs"}) table.push_back({u, {n, n}, ParamKind::kRecurrent});
  for (const char* cc : {"decoder.C_cz", "decoder.C_cr", "decoder.C_cs"}) table.push_back({cc, {n, d}, ParamKind::kInput});
  table.push_back({"decoder.W_init", {n, d}, ParamKind::kInput});
  table.push_back({"output.W_o", {k, m}, ParamKind::kInput});
  table.push_back({"output.W_s", {m, n}, ParamKind::kInput});
  table.push_back({"output.W_c", {m, d}, ParamKind::kInput});
  table.push_back({"attention.nu_att", {na}, ParamKind::kInput});
  table.push_back({"attention.W_att", {na, n}, ParamKind::kInput});
  table.push_back({"attention.U_att", {na, d}, ParamKind::kInput});
  if (c.coverage) {
    table.push_back({"attention.Q", {c.coverage_width, 1, c.coverage_channels}, ParamKind::kFilter});
    table.push_back({"attention.U_f", {na, c.coverage_channels}, ParamKind::kInput});
  }
  return table;
}

const Tensor& ModelParams::at(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw MissingKeyError(name);
  return it->second;
}

Tensor& ModelParams::at(const std::string& name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw MissingKeyError(name);
  return it->second;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : tensors) total += t.size();
  return total;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams params;
  params.config = config;
  std::mt19937_64 rng(seed);
  for (const auto& spec : parameter_table(config)) {
    Tensor t(spec.shape);
    switch (spec.kind) {
      case ParamKind::kRecurrent:
        fill_orthogonal(t, rng);
        break;
      case ParamKind::kFilter:
        fill_uniform(t, static_cast<double>(spec.shape[0] * spec.shape[1]),
                     static_cast<double>(spec.shape[0] * spec.shape[2]), rng);
        break;
      case ParamKind::kInput:
        if (spec.shape.size() == 1) {
          fill_uniform(t, static_cast<double>(spec.shape[0]), 1.0, rng);
        } else {
          fill_uniform(t, static_cast<double>(spec.shape[1]), static_cast<double>(spec.shape[0]), rng);
        }
        break;
    }
    params.tensors.emplace(spec.name, std::move(t));
  }
  return params;
}

ModelParams zero_params(const ModelConfig& config) {
  ModelParams params;
  params.config = config;
  for (const auto& spec : parameter_table(config)) params.tensors.emplace(spec.name, Tensor(spec.shape));
  return params;
}

Grad zero_grad(const ModelParams& params) {
  Grad g;
  for (const auto& [name, t] : params.tensors) g.emplace(name, Tensor(t.shape()));
  return g;
}

double global_norm(const Grad& grad) {
  double sq = 0.0;
  for (const auto& [name, t] : grad) {
    for (double v : t.values()) sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace ink2tex
