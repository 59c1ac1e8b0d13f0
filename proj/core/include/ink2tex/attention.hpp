#pragma once

#include <cstddef>
#include <vector>

#include "ink2tex/params.hpp"
#include "ink2tex/tape.hpp"

namespace ink2tex {

struct AttentionWeights {
  Var nu_att;  // n'
  Var W_att;   // n' x n
  Var U_att;   // n' x D
  Var Q;       // w x 1 x q, invalid without coverage
  Var U_f;     // n' x q, invalid without coverage
  bool coverage = false;
};

AttentionWeights bind_attention(Tape& tape, const ModelParams& params);

/// Per-sequence quantities shared by every decode step.
struct AttentionInputs {
  Var annotations;  // L x D
  Var projected;    // L x n', row i = U_att a_i
};

AttentionInputs prepare_attention(Var annotations, const AttentionWeights& w);

/// F = Q * beta: same-padded convolution of the coverage vector, L -> L x q.
Var coverage_features(Var beta, Var filter);

struct AttentionStepVar {
  Var alpha;    // L
  Var context;  // D
  Var beta;     // L, coverage after this step
};

/// e_i = nu^T tanh(W_att s_prev + U_att a_i [+ U_f f_i]), alpha = softmax(e),
/// c = sum_i alpha_i a_i, beta' = beta + alpha. The coverage term is added last, so zero
/// coverage weights reproduce the plain energies exactly.
AttentionStepVar attend(Var s_prev, const AttentionInputs& inputs, Var beta, const AttentionWeights& w);

/// Coverage bookkeeping as values: beta is the running sum of the stored alphas.
struct AttentionState {
  Tensor beta;
  std::vector<Tensor> alpha_history;

  static AttentionState initial(std::size_t length);
  void advance(const Tensor& alpha);
  std::size_t length() const { return beta.size(); }
};

struct AttentionResult {
  Tensor alpha;
  Tensor context;
  AttentionState state;
};

/// Value-level attend over annotations A (L x D).
AttentionResult attend(const ModelParams& params, const Tensor& s_prev, const Tensor& annotations,
                       const AttentionState& state);

/// Value-level F = Q * beta.
Tensor coverage_features(const Tensor& beta, const Tensor& filter);

}  // namespace ink2tex
