#include "ink2tex/model.hpp"

#include "ink2tex/errors.hpp"

namespace ink2tex {

Var sequence_loss(Tape& tape, const ModelParams& params, const FeatureSequence& x, std::span<const TokenId> target) {
  if (target.empty()) throw ContractError("sequence_loss: empty target sequence");
  if (target.back() != Vocabulary::kEnd) throw ContractError("sequence_loss: target must end with </s>");

  const auto encoded = encode(tape, params, x);
  const auto att = bind_attention(tape, params);
  const auto dec = bind_decoder(tape, params);
  const auto inputs = prepare_attention(encoded.annotations, att);

  Var s = init_state(encoded.annotations, dec);
  Var beta = tape.constant(Tensor({encoded.annotations.shape()[0]}));
  TokenId prev = Vocabulary::kStart;
  std::vector<Var> terms;
  terms.reserve(target.size());
  for (const TokenId y : target) {
    const auto step = attend(s, inputs, beta, att);
    const auto out = decode_step(prev, s, step.context, dec);
    terms.push_back(cross_entropy(out.logits, y));
    s = out.state;
    beta = step.beta;
    prev = y;
  }
  Var loss = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) loss = add(loss, terms[i]);
  return loss;
}

double sequence_loss(const ModelParams& params, const FeatureSequence& x, std::span<const TokenId> target) {
  Tape tape(false);
  return sequence_loss(tape, params, x, target).value()[0];
}

LossAndGrad loss_and_gradient(const ModelParams& params, const FeatureSequence& x, std::span<const TokenId> target) {
  Tape tape;
  const Var loss = sequence_loss(tape, params, x, target);
  tape.backward(loss);
  return {loss.value()[0], tape.parameter_gradients(params.tensors)};
}

SequenceDecoder::SequenceDecoder(const ModelParams& params, const FeatureSequence& x)
    : params_(&params), annotations_(encode(params, x)) {
  projected_ = kernels::linear_rows(annotations_.a, params.at("attention.U_att"));
}

DecodeState SequenceDecoder::initial() const {
  return {init_state(*params_, annotations_.a), AttentionState::initial(annotations_.a.shape()[0])};
}

std::pair<DecodeState, Tensor> SequenceDecoder::step(const DecodeState& state, TokenId y_prev) const {
  Tape tape(false);
  const auto att = bind_attention(tape, *params_);
  const auto dec = bind_decoder(tape, *params_);
  const AttentionInputs inputs{tape.reference(annotations_.a), tape.reference(projected_)};
  const Var s_prev = tape.reference(state.s);
  const auto a = attend(s_prev, inputs, tape.reference(state.attention.beta), att);
  const auto out = decode_step(y_prev, s_prev, a.context, dec);
  DecodeState next{out.state.value(), state.attention};
  next.attention.advance(a.alpha.value());
  return {std::move(next), kernels::softmax(out.logits.value())};
}

}  // namespace ink2tex
