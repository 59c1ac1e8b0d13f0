#pragma once

#include <cstddef>

#include "ink2tex/params.hpp"
#include "ink2tex/tape.hpp"
#include "ink2tex/vocabulary.hpp"

namespace ink2tex {

struct DecoderWeights {
  Var E;                    // K x m, shared by the GRU input and the output layer
  Var W_yz, W_yr, W_ys;     // n x m
  Var U_sz, U_sr, U_rs;     // n x n
  Var C_cz, C_cr, C_cs;     // n x D
  Var W_o;                  // K x m
  Var W_s;                  // m x n
  Var W_c;                  // m x D
  Var W_init;               // n x D
};

DecoderWeights bind_decoder(Tape& tape, const ModelParams& params);

struct DecoderStepVar {
  Var state;   // s_t
  Var logits;  // W_o (E y_prev + W_s s_t + W_c c_t)
};

/// One decoder GRU step on (E y_prev, s_prev, c_t) followed by the output projection.
/// Throws DimensionError when y_prev is not a vocabulary index.
DecoderStepVar decode_step(TokenId y_prev, Var s_prev, Var context, const DecoderWeights& w);

/// s_0 = tanh(W_init mean_i a_i).
Var init_state(Var annotations, const DecoderWeights& w);

struct DecoderStep {
  Tensor s;       // s_t
  Tensor y_dist;  // softmax of the logits
};

DecoderStep decode_step(const ModelParams& params, TokenId y_prev, const Tensor& s_prev, const Tensor& context);
Tensor init_state(const ModelParams& params, const Tensor& annotations);

}  // namespace ink2tex
