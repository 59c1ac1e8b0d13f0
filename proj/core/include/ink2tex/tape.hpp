#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ink2tex/tensor.hpp"

namespace ink2tex {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records a computation for reverse-mode differentiation. One tape per sequence; it is
/// rebuilt for every example. A tape constructed with `record = false` only evaluates.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Owned value that never receives a gradient.
  Var constant(Tensor value);
  /// Borrowed value that never receives a gradient. `value` must outlive the tape.
  Var reference(const Tensor& value);
  /// Owned leaf that receives a gradient.
  Var variable(Tensor value);
  /// Borrowed, named leaf that receives a gradient. Repeated calls with one name return the
  /// same node. `value` must outlive the tape.
  Var parameter(const std::string& name, const Tensor& value);

  /// Records an op result. `backward` runs only if some parent requires a gradient; pass
  /// parents so that requirement can be propagated.
  Var emit(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var emit(Tensor value, std::span<const Var> parents, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node. Throws ContractError
  /// if `loss` is not a single value.
  void backward(Var loss);

  /// Gradient buffer of `v`, allocated as zeros on first use.
  Tensor& grad_buffer(Var v);
  /// Accumulated gradient of `v`; zeros if nothing reached it.
  Tensor grad(Var v) const;

  /// Gradients of the named parameters: one entry per key of `params`, zero for parameters
  /// the computation never touched.
  std::map<std::string, Tensor> parameter_gradients(const std::map<std::string, Tensor>& params) const;

  const Tensor& value_of(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> parameters_;
};

enum class PoolMode { kMax, kMean, kSubsample };

// Differentiable ops. Shapes follow the kernels of the same name.

Var matvec(Var w, Var x);
Var matvec_transposed(Var m, Var v);
Var linear_rows(Var x, Var w);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_rowwise(Var m, Var v);
Var scale(Var a, double factor);
Var sigmoid(Var x);
Var tanh(Var x);
Var softmax(Var x);
/// -log softmax(logits)[target], as a scalar.
Var cross_entropy(Var logits, std::size_t target);
Var conv1d(Var signal, Var filter);
Var embed(Var e, std::size_t index);
/// (1 - z) * h_prev + z * h_candidate
Var gru_blend(Var z, Var h_prev, Var h_candidate);
/// Row r of a matrix as a vector.
Var row(Var m, std::size_t r);
/// Vectors of equal length stacked into a matrix.
Var stack_rows(std::span<const Var> rows);
/// [a | b] for matrices with equal row counts.
Var concat_cols(Var a, Var b);
/// Vector of length L viewed as an L x 1 matrix.
Var as_column(Var v);
/// Non-overlapping windows of `stride` rows; the last window may be short.
Var pool_rows(Var m, std::size_t stride, PoolMode mode = PoolMode::kMax);
Var mean_rows(Var m);
/// Sum of all elements, as a scalar.
Var sum(Var x);

}  // namespace ink2tex
