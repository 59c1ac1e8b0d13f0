#include "ink2tex/optimizer.hpp"

#include <cmath>

#include "ink2tex/errors.hpp"

namespace ink2tex {

OptimState OptimState::zeros(const ModelParams& params) {
  OptimState s;
  for (const auto& [name, t] : params.tensors) {
    s.sq_grad.emplace(name, Tensor(t.shape()));
    s.sq_update.emplace(name, Tensor(t.shape()));
  }
  return s;
}

double clip_gradients(Grad& grad, double clip_norm) {
  if (clip_norm <= 0.0) return 1.0;
  const double norm = global_norm(grad);
  if (!(norm > clip_norm)) return 1.0;
  const double factor = clip_norm / norm;
  for (auto& [name, t] : grad) {
    for (auto& v : t.values()) v *= factor;
  }
  return factor;
}

StepReport adadelta_step(ModelParams& params, Grad grad, OptimState& state, const AdaDeltaConfig& config) {
  if (!(config.rho > 0.0 && config.rho < 1.0) || !(config.epsilon > 0.0)) {
    throw ConfigError("AdaDelta needs 0 < rho < 1 and epsilon > 0");
  }
  StepReport report;
  report.grad_norm = global_norm(grad);
  if (!std::isfinite(report.grad_norm)) return report;
  report.clip_scale = clip_gradients(grad, config.clip_norm);

  const double rho = config.rho, eps = config.epsilon;
  for (auto& [name, x] : params.tensors) {
    const auto g_it = grad.find(name);
    if (g_it == grad.end()) throw MissingKeyError(name);
    const Tensor& g = g_it->second;
    Tensor& eg = state.sq_grad.at(name);
    Tensor& ex = state.sq_update.at(name);
    if (g.shape() != x.shape()) throw ShapeMismatchError(name, shape_string(g.shape()), shape_string(x.shape()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
      const double dx = -std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
      ex[i] = rho * ex[i] + (1.0 - rho) * dx * dx;
      x[i] += dx;
    }
  }
  report.applied = true;
  return report;
}

}  // namespace ink2tex
