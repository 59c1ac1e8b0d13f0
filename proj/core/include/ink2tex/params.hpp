#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ink2tex/tape.hpp"
#include "ink2tex/tensor.hpp"

namespace ink2tex {

/// Hyperparameters that fix every parameter shape. Defaults are the full-size recognizer:
/// 4 bidirectional layers of 250 units per direction with the top two layers pooled,
/// decoder n = 256, embedding m = 256, attention n' = 500, annotation D = 500.
struct ModelConfig {
  std::size_t input_dim = 8;
  std::size_t encoder_layers = 4;
  std::size_t encoder_hidden = 250;
  /// Layers whose input is pooled over time before the layer runs.
  std::vector<std::size_t> pooled_layers = {2, 3};
  std::size_t pooling_stride = 2;
  PoolMode pooling_mode = PoolMode::kMax;

  std::size_t decoder_hidden = 256;
  std::size_t embedding_dim = 256;
  std::size_t attention_dim = 500;
  std::size_t vocab_size = 0;

  bool coverage = true;
  std::size_t coverage_width = 11;
  std::size_t coverage_channels = 5;

  /// Token strings by index, reserved entries included. May be empty, in which case only
  /// vocab_size is known.
  std::vector<std::string> vocabulary;

  std::size_t annotation_dim() const noexcept { return 2 * encoder_hidden; }
  bool is_pooled(std::size_t layer) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws ConfigError when a field is out of range or inconsistent.
void validate(const ModelConfig& config);

std::string to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& json);

enum class ParamKind {
  kInput,      // uniform Glorot
  kRecurrent,  // orthogonal
  kFilter,     // uniform Glorot over width x channels
};

struct ParamSpec {
  std::string name;
  Shape shape;
  ParamKind kind;
};

/// Every parameter the configuration implies, in canonical order.
std::vector<ParamSpec> parameter_table(const ModelConfig& config);

using TensorMap = std::map<std::string, Tensor>;
using Grad = TensorMap;

struct ModelParams {
  ModelConfig config;
  TensorMap tensors;

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Glorot-uniform weights, orthogonal recurrent matrices, no biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);
/// Every tensor of `config` filled with zeros.
ModelParams zero_params(const ModelConfig& config);

Grad zero_grad(const ModelParams& params);
double global_norm(const Grad& grad);

/// Fully qualified parameter names.
namespace names {
std::string encoder(std::size_t layer, bool forward, const char* weight);
inline constexpr const char* kEmbedding = "embedding.E";
}  // namespace names

}  // namespace ink2tex
