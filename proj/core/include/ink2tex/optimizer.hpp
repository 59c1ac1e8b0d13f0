#pragma once

#include "ink2tex/params.hpp"

namespace ink2tex {

struct AdaDeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  /// Global L2 threshold; <= 0 disables clipping.
  double clip_norm = 5.0;
};

/// Running averages E[g^2] and E[dx^2], keyed like the parameters.
struct OptimState {
  TensorMap sq_grad;
  TensorMap sq_update;

  static OptimState zeros(const ModelParams& params);
};

/// Scales `grad` by clip_norm / ||grad|| when the global norm exceeds clip_norm. Returns the
/// factor applied (1 when untouched).
double clip_gradients(Grad& grad, double clip_norm);

struct StepReport {
  bool applied = false;
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
};

/// Clips `grad`, then per element: E[g^2] <- rho E[g^2] + (1 - rho) g^2,
/// dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g, E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2,
/// x <- x + dx. A non-finite gradient leaves params and state untouched and is reported
/// with applied = false.
StepReport adadelta_step(ModelParams& params, Grad grad, OptimState& state, const AdaDeltaConfig& config);

}  // namespace ink2tex
