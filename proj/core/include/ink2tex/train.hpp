#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ink2tex/model.hpp"
#include "ink2tex/optimizer.hpp"
#include "ink2tex/params.hpp"
#include "ink2tex/preprocess.hpp"

namespace ink2tex {

struct TrainConfig {
  AdaDeltaConfig optimizer;
  /// Phase 2 only.
  double weight_noise_std = 0.05;
  std::size_t max_epochs = 100;  // per phase
  std::size_t patience = 15;
  std::uint64_t seed = 1;
  std::size_t batch_size = 8;
  /// Cap on applied updates across both phases; 0 means no cap.
  std::size_t max_updates = 0;
  bool anneal = true;
  /// Beam width used to decode the validation set.
  std::size_t valid_beam = 1;
  std::size_t valid_max_len = 200;
  std::size_t workers = 1;
};

/// Throws ConfigError for out-of-range fields.
void validate(const TrainConfig& config);

struct TrainingExample {
  FeatureSequence x;
  std::vector<TokenId> y;  // ends with </s>
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based, continues across phases
  int phase = 1;
  double train_loss = 0.0;
  double valid_wer = 0.0;
  double valid_exprate = 0.0;
  double valid_loss = 0.0;
  double seconds = 0.0;
  std::size_t updates = 0;  // cumulative applied updates
  std::size_t rejected = 0;
};

/// epoch, mean train loss, validation WER, validation ExpRate, wall-clock seconds.
std::string format_log_line(const EpochRecord& record);

struct TrainResult {
  ModelParams best;
  std::vector<EpochRecord> log;
  std::size_t updates = 0;
};

/// Mean teacher-forced loss and its gradient over `batch`, summed in index order.
/// With noise_std > 0 every example sees its own noisy copy of the weights, seeded by
/// (seed, slot, step).
LossAndGrad batch_gradient(const ModelParams& params, std::span<const TrainingExample* const> batch, double noise_std,
                           std::uint64_t seed, std::uint64_t step, std::size_t workers);

/// Greedy or beam decoding of every example; returns corpus WER, ExpRate and mean loss.
struct Evaluation {
  double wer = 0.0;
  double exprate = 0.0;
  double loss = 0.0;
};
Evaluation evaluate(const ModelParams& params, std::span<const TrainingExample> examples, std::size_t beam,
                    std::size_t max_len, std::size_t workers);

/// Phase 1 trains without weight noise until validation WER has not improved for `patience`
/// epochs. Phase 2 restarts from the phase-1 best with Gaussian weight noise and the same
/// rule. Equal WERs are ranked by validation loss. Returns the best checkpoint overall.
TrainResult train_loop(const ModelParams& init, std::span<const TrainingExample> train,
                       std::span<const TrainingExample> valid, const TrainConfig& config,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace ink2tex
