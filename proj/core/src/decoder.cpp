#include "ink2tex/decoder.hpp"

#include "ink2tex/errors.hpp"

namespace ink2tex {

DecoderWeights bind_decoder(Tape& tape, const ModelParams& params) {
  auto p = [&](const char* name) { return tape.parameter(name, params.at(name)); };
  DecoderWeights w;
  w.E = p(names::kEmbedding);
  w.W_yz = p("decoder.W_yz");
  w.W_yr = p("decoder.W_yr");
  w.W_ys = p("decoder.W_ys");
  w.U_sz = p("decoder.U_sz");
  w.U_sr = p("decoder.U_sr");
  w.U_rs = p("decoder.U_rs");
  w.C_cz = p("decoder.C_cz");
  w.C_cr = p("decoder.C_cr");
  w.C_cs = p("decoder.C_cs");
  w.W_o = p("output.W_o");
  w.W_s = p("output.W_s");
  w.W_c = p("output.W_c");
  w.W_init = p("decoder.W_init");
  return w;
}

DecoderStepVar decode_step(TokenId y_prev, Var s_prev, Var context, const DecoderWeights& w) {
  const std::size_t k = w.E.shape()[0];
  if (y_prev >= k) {
    throw DimensionError("decode_step: token " + std::to_string(y_prev) + " out of range for vocabulary of size " +
                         std::to_string(k));
  }
  const Var e = embed(w.E, y_prev);
  const Var z = sigmoid(add(add(matvec(w.W_yz, e), matvec(w.U_sz, s_prev)), matvec(w.C_cz, context)));
  const Var r = sigmoid(add(add(matvec(w.W_yr, e), matvec(w.U_sr, s_prev)), matvec(w.C_cr, context)));
  const Var candidate =
      tanh(add(add(matvec(w.W_ys, e), matvec(w.U_rs, mul(r, s_prev))), matvec(w.C_cs, context)));
  const Var s = gru_blend(z, s_prev, candidate);
  const Var readout = add(add(e, matvec(w.W_s, s)), matvec(w.W_c, context));
  return {s, matvec(w.W_o, readout)};
}

Var init_state(Var annotations, const DecoderWeights& w) { return tanh(matvec(w.W_init, mean_rows(annotations))); }

DecoderStep decode_step(const ModelParams& params, TokenId y_prev, const Tensor& s_prev, const Tensor& context) {
  Tape tape(false);
  const auto w = bind_decoder(tape, params);
  const auto step = decode_step(y_prev, tape.reference(s_prev), tape.reference(context), w);
  return {step.state.value(), kernels::softmax(step.logits.value())};
}

Tensor init_state(const ModelParams& params, const Tensor& annotations) {
  Tape tape(false);
  const auto w = bind_decoder(tape, params);
  return init_state(tape.reference(annotations), w).value();
}

}  // namespace ink2tex
