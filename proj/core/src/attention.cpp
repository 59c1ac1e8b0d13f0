#include "ink2tex/attention.hpp"

#include "ink2tex/errors.hpp"

namespace ink2tex {

AttentionWeights bind_attention(Tape& tape, const ModelParams& params) {
  auto p = [&](const char* name) { return tape.parameter(name, params.at(name)); };
  AttentionWeights w;
  w.nu_att = p("attention.nu_att");
  w.W_att = p("attention.W_att");
  w.U_att = p("attention.U_att");
  w.coverage = params.config.coverage;
  if (w.coverage) {
    w.Q = p("attention.Q");
    w.U_f = p("attention.U_f");
  }
  return w;
}

AttentionInputs prepare_attention(Var annotations, const AttentionWeights& w) {
  return {annotations, linear_rows(annotations, w.U_att)};
}

Var coverage_features(Var beta, Var filter) { return conv1d(as_column(beta), filter); }

AttentionStepVar attend(Var s_prev, const AttentionInputs& inputs, Var beta, const AttentionWeights& w) {
  const std::size_t length = inputs.annotations.shape()[0];
  if (beta.value().rank() != 1 || beta.size() != length) {
    throw DimensionError("attend: coverage vector " + shape_string(beta.shape()) + " does not match annotations " +
                         shape_string(inputs.annotations.shape()));
  }
  Var pre = add_rowwise(inputs.projected, matvec(w.W_att, s_prev));
  if (w.coverage) pre = add(pre, linear_rows(coverage_features(beta, w.Q), w.U_f));
  const Var energies = matvec(tanh(pre), w.nu_att);
  const Var alpha = softmax(energies);
  const Var context = matvec_transposed(inputs.annotations, alpha);
  return {alpha, context, add(beta, alpha)};
}

AttentionState AttentionState::initial(std::size_t length) {
  AttentionState s;
  s.beta = Tensor({length});
  return s;
}

void AttentionState::advance(const Tensor& alpha) {
  beta = kernels::add(beta, alpha);
  alpha_history.push_back(alpha);
}

AttentionResult attend(const ModelParams& params, const Tensor& s_prev, const Tensor& annotations,
                       const AttentionState& state) {
  Tape tape(false);
  const auto w = bind_attention(tape, params);
  const auto inputs = prepare_attention(tape.reference(annotations), w);
  const auto step = attend(tape.reference(s_prev), inputs, tape.reference(state.beta), w);
  AttentionResult result{step.alpha.value(), step.context.value(), state};
  result.state.advance(result.alpha);
  return result;
}

Tensor coverage_features(const Tensor& beta, const Tensor& filter) {
  if (beta.rank() != 1) throw DimensionError("coverage_features expects a vector, got " + shape_string(beta.shape()));
  return kernels::conv1d(Tensor({beta.size(), 1}, std::vector<double>(beta.values().begin(), beta.values().end())),
                         filter);
}

}  // namespace ink2tex
