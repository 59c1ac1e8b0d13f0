#include "ink2tex/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "ink2tex/beam_search.hpp"
#include "ink2tex/errors.hpp"
#include "ink2tex/metrics.hpp"
#include "ink2tex/model.hpp"

namespace ink2tex {
namespace {

/// Runs fn(i) for i in [0, n) over up to `workers` threads in contiguous chunks.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ModelParams noisy_copy(const ModelParams& params, double std_dev, std::uint64_t seed, std::uint64_t slot,
                       std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, std_dev);
  ModelParams out = params;
  for (auto& [name, tensor] : out.tensors) {
    for (double& v : tensor.values()) v += noise(rng);
  }
  return out;
}

std::vector<std::string> id_strings(std::span<const TokenId> ids) {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id == Vocabulary::kEnd) break;
    out.push_back(std::to_string(id));
  }
  return out;
}

bool better(double wer, double loss, double best_wer, double best_loss) {
  if (wer != best_wer) return wer < best_wer;
  return loss < best_loss;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.optimizer.rho > 0.0 && c.optimizer.rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(c.optimizer.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(c.optimizer.clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (!(c.weight_noise_std >= 0.0) || !std::isfinite(c.weight_noise_std)) {
    throw ConfigError("weight_noise_std must be a non-negative number");
  }
  if (c.max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (c.patience == 0) throw ConfigError("patience must be positive");
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.valid_beam == 0) throw ConfigError("valid_beam must be positive");
  if (c.valid_max_len == 0) throw ConfigError("valid_max_len must be positive");
}

std::string format_log_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.6f\t%.6f\t%.3f", r.epoch, r.train_loss, r.valid_wer, r.valid_exprate,
                r.seconds);
  return buf;
}

LossAndGrad batch_gradient(const ModelParams& params, std::span<const TrainingExample* const> batch, double noise_std,
                           std::uint64_t seed, std::uint64_t step, std::size_t workers) {
  if (batch.empty()) throw ContractError("empty batch");
  std::vector<LossAndGrad> parts(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    const auto& ex = *batch[i];
    if (noise_std > 0.0) {
      const ModelParams noisy = noisy_copy(params, noise_std, seed, i, step);
      parts[i] = loss_and_gradient(noisy, ex.x, ex.y);
    } else {
      parts[i] = loss_and_gradient(params, ex.x, ex.y);
    }
  });
  LossAndGrad total{0.0, std::move(parts[0].grad)};
  total.loss = parts[0].loss;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    total.loss += parts[i].loss;
    for (auto& [name, g] : total.grad) {
      auto dst = g.values();
      const auto src = parts[i].grad.at(name).values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  for (auto& [name, g] : total.grad) {
    for (double& v : g.values()) v *= inv;
  }
  return total;
}

Evaluation evaluate(const ModelParams& params, std::span<const TrainingExample> examples, std::size_t beam,
                    std::size_t max_len, std::size_t workers) {
  if (examples.empty()) return {};
  std::vector<TokenSeq> refs(examples.size()), hyps(examples.size());
  std::vector<double> losses(examples.size());
  const std::span<const ModelParams> models(&params, 1);
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    const auto result = beam_search(models, examples[i].x, BeamConfig{beam, max_len});
    refs[i] = id_strings(examples[i].y);
    hyps[i] = id_strings(result.tokens);
    losses[i] = sequence_loss(params, examples[i].x, examples[i].y);
  });
  Evaluation ev;
  ev.wer = corpus_wer(refs, hyps);
  ev.exprate = exprate(refs, hyps).exact;
  ev.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
  return ev;
}

TrainResult train_loop(const ModelParams& init, std::span<const TrainingExample> train,
                       std::span<const TrainingExample> valid, const TrainConfig& config,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(config);
  if (train.empty()) throw EmptyInputError("training set is empty");
  if (valid.empty()) valid = train;

  TrainResult result{init, {}, 0};
  double best_wer = std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  std::mt19937_64 shuffle_rng(config.seed);
  std::size_t attempts = 0;
  std::size_t epoch = 0;
  const auto cap_reached = [&] { return config.max_updates != 0 && result.updates >= config.max_updates; };

  const int phases = config.anneal ? 2 : 1;
  for (int phase = 1; phase <= phases && !cap_reached(); ++phase) {
    ModelParams params = result.best;
    OptimState opt = OptimState::zeros(params);
    const double noise = phase == 2 ? config.weight_noise_std : 0.0;
    double phase_wer = std::numeric_limits<double>::infinity();
    double phase_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    spdlog::info("training phase {} (weight noise {})", phase, noise);

    for (std::size_t e = 0; e < config.max_epochs && !cap_reached(); ++e) {
      const auto start = std::chrono::steady_clock::now();
      std::vector<const TrainingExample*> order;
      for (const auto& ex : train) order.push_back(&ex);
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      EpochRecord rec;
      rec.epoch = ++epoch;
      rec.phase = phase;
      double loss_sum = 0.0;
      std::size_t batches = 0;
      double last_norm = 0.0;
      for (std::size_t b = 0; b < order.size() && !cap_reached(); b += config.batch_size) {
        const std::size_t end = std::min(order.size(), b + config.batch_size);
        const std::span<const TrainingExample* const> batch(order.data() + b, end - b);
        auto lg = batch_gradient(params, batch, noise, config.seed, attempts++, config.workers);
        loss_sum += lg.loss * static_cast<double>(batch.size());
        const auto report = adadelta_step(params, std::move(lg.grad), opt, config.optimizer);
        last_norm = report.grad_norm;
        ++batches;
        if (report.applied) {
          ++result.updates;
        } else {
          ++rec.rejected;
        }
      }
      if (batches == 0) break;
      if (rec.rejected == batches) {
        throw Error("epoch " + std::to_string(rec.epoch) + " (phase " + std::to_string(phase) + "): all " +
                    std::to_string(batches) + " gradient steps were non-finite (last norm " +
                    std::to_string(last_norm) + ", mean loss " + std::to_string(loss_sum / order.size()) + ")");
      }
      rec.train_loss = loss_sum / static_cast<double>(order.size());
      const auto ev = evaluate(params, valid, config.valid_beam, config.valid_max_len, config.workers);
      rec.valid_wer = ev.wer;
      rec.valid_exprate = ev.exprate;
      rec.valid_loss = ev.loss;
      rec.updates = result.updates;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.log.push_back(rec);
      if (on_epoch) on_epoch(rec);

      if (better(ev.wer, ev.loss, best_wer, best_loss)) {
        best_wer = ev.wer;
        best_loss = ev.loss;
        result.best = params;
      }
      if (better(ev.wer, ev.loss, phase_wer, phase_loss)) {
        phase_wer = ev.wer;
        phase_loss = ev.loss;
        stale = 0;
      } else if (++stale >= config.patience) {
        spdlog::info("phase {}: no improvement for {} epochs", phase, stale);
        break;
      }
    }
  }
  return result;
}

}  // namespace ink2tex
