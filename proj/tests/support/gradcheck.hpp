#pragma once

// Central finite differences against tape gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ink2tex/params.hpp"
#include "ink2tex/tape.hpp"

namespace ink2tex::fixture {

struct GradMismatch {
  std::string name;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradMismatch> failures;
};

/// f builds a scalar on the tape from the tensors of `params` (via tape.parameter).
using ScalarFn = std::function<Var(Tape&, const ModelParams&)>;

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps pairs of near-zero
// derivatives, where both values are dominated by rounding, from reading as failures.
inline constexpr double kGradFloor = 1e-6;
inline constexpr double kStep = 1e-5;

inline double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), kGradFloor});
}

inline double evaluate_scalar(const ScalarFn& f, const ModelParams& params) {
  Tape tape(false);
  return f(tape, params).value()[0];
}

/// Checks every element of the tensors named in `names` (all tensors when empty).
inline GradReport check_gradients(const ScalarFn& f, ModelParams params, double tolerance,
                                  const std::vector<std::string>& names = {}) {
  Tape tape;
  const Var loss = f(tape, params);
  tape.backward(loss);
  const auto grads = tape.parameter_gradients(params.tensors);

  GradReport report;
  for (auto& [name, tensor] : params.tensors) {
    if (!names.empty() && std::find(names.begin(), names.end(), name) == names.end()) continue;
    const Tensor& g = grads.at(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + kStep;
      const double up = evaluate_scalar(f, params);
      tensor[i] = saved - kStep;
      const double down = evaluate_scalar(f, params);
      tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * kStep);
      const double err = relative_error(g[i], numeric);
      report.max_rel_error = std::max(report.max_rel_error, err);
      ++report.checked;
      if (err > tolerance) report.failures.push_back({name, i, g[i], numeric, err});
    }
  }
  return report;
}

}  // namespace ink2tex::fixture
