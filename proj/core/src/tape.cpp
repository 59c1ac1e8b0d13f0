#include "ink2tex/tape.hpp"

#include <algorithm>
#include <cmath>

#include "ink2tex/errors.hpp"

namespace ink2tex {

const Tensor& Var::value() const { return tape_->value_of(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::push(Node node) {
  if (nodes_.size() >= UINT32_MAX) throw ContractError("tape is full");
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::reference(const Tensor& value) {
  Node n;
  n.external = &value;
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = record_;
  return push(std::move(n));
}

Var Tape::parameter(const std::string& name, const Tensor& value) {
  if (const auto it = parameters_.find(name); it != parameters_.end()) return Var(this, it->second);
  Node n;
  n.external = &value;
  n.requires_grad = record_;
  Var v = push(std::move(n));
  parameters_.emplace(name, v.id());
  return v;
}

Var Tape::emit(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  return emit(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
}

Var Tape::emit(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  if (record_) {
    for (const auto& p : parents) {
      if (p.tape_ != this) throw ContractError("op mixes variables from different tapes");
      if (nodes_[p.id_].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

const Tensor& Tape::value_of(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id_];
  if (n.grad.empty() && !value_of(v.id_).empty()) n.grad = Tensor(value_of(v.id_).shape());
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  return n.grad.empty() ? Tensor(value_of(v.id_).shape()) : n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + shape_string(loss.value().shape()));
  }
  if (!record_) throw ContractError("backward on a tape that does not record");
  grad_buffer(loss)[0] += 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, value_of(static_cast<std::uint32_t>(i)), n.grad);
  }
}

std::map<std::string, Tensor> Tape::parameter_gradients(const std::map<std::string, Tensor>& params) const {
  std::map<std::string, Tensor> grads;
  for (const auto& [name, value] : params) {
    const auto it = parameters_.find(name);
    if (it == parameters_.end() || nodes_[it->second].grad.empty()) {
      grads.emplace(name, Tensor(value.shape()));
    } else {
      grads.emplace(name, nodes_[it->second].grad);
    }
  }
  return grads;
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("op mixes variables from different tapes");
  return a.tape();
}

// Gradient buffer of `v` if it wants one, else nullptr.
Tensor* sink(Tape& tape, Var v) { return v.requires_grad() ? &tape.grad_buffer(v) : nullptr; }

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                       " do not conform");
}

}  // namespace

Var matvec(Var w, Var x) {
  Tape& tape = same_tape(w, x);
  return tape.emit(kernels::matvec(w.value(), x.value()), {w, x}, [w, x](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& W = w.value();
    const Tensor& X = x.value();
    const std::size_t r = W.shape()[0], c = W.shape()[1];
    if (Tensor* dw = sink(t, w)) {
      for (std::size_t i = 0; i < r; ++i) {
        const double gi = g[i];
        double* row = dw->data() + i * c;
        for (std::size_t j = 0; j < c; ++j) row[j] += gi * X[j];
      }
    }
    if (Tensor* dx = sink(t, x)) {
      for (std::size_t i = 0; i < r; ++i) {
        const double gi = g[i];
        const double* row = W.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) (*dx)[j] += gi * row[j];
      }
    }
  });
}

Var matvec_transposed(Var m, Var v) {
  Tape& tape = same_tape(m, v);
  return tape.emit(kernels::matvec_transposed(m.value(), v.value()), {m, v},
                   [m, v](Tape& t, const Tensor&, const Tensor& g) {
                     const Tensor& M = m.value();
                     const Tensor& V = v.value();
                     const std::size_t r = M.shape()[0], c = M.shape()[1];
                     if (Tensor* dm = sink(t, m)) {
                       for (std::size_t i = 0; i < r; ++i) {
                         double* row = dm->data() + i * c;
                         for (std::size_t j = 0; j < c; ++j) row[j] += V[i] * g[j];
                       }
                     }
                     if (Tensor* dv = sink(t, v)) {
                       for (std::size_t i = 0; i < r; ++i) {
                         const double* row = M.data() + i * c;
                         double acc = 0.0;
                         for (std::size_t j = 0; j < c; ++j) acc += row[j] * g[j];
                         (*dv)[i] += acc;
                       }
                     }
                   });
}

Var linear_rows(Var x, Var w) {
  Tape& tape = same_tape(x, w);
  return tape.emit(kernels::linear_rows(x.value(), w.value()), {x, w}, [x, w](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& X = x.value();
    const Tensor& W = w.value();
    const std::size_t rows = X.shape()[0], c = X.shape()[1], h = W.shape()[0];
    Tensor* dx = sink(t, x);
    Tensor* dw = sink(t, w);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* xr = X.data() + i * c;
      const double* gr = g.data() + i * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double gk = gr[k];
        if (gk == 0.0) continue;
        if (dx) {
          const double* wr = W.data() + k * c;
          double* dxr = dx->data() + i * c;
          for (std::size_t j = 0; j < c; ++j) dxr[j] += gk * wr[j];
        }
        if (dw) {
          double* dwr = dw->data() + k * c;
          for (std::size_t j = 0; j < c; ++j) dwr[j] += gk * xr[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.emit(kernels::add(a.value(), b.value()), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* da = sink(t, a)) for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i];
    if (Tensor* db = sink(t, b)) for (std::size_t i = 0; i < g.size(); ++i) (*db)[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.emit(kernels::sub(a.value(), b.value()), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* da = sink(t, a)) for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i];
    if (Tensor* db = sink(t, b)) for (std::size_t i = 0; i < g.size(); ++i) (*db)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return tape.emit(kernels::elementwise_mul(a.value(), b.value()), {a, b},
                   [a, b](Tape& t, const Tensor&, const Tensor& g) {
                     const Tensor& A = a.value();
                     const Tensor& B = b.value();
                     if (Tensor* da = sink(t, a)) for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i] * B[i];
                     if (Tensor* db = sink(t, b)) for (std::size_t i = 0; i < g.size(); ++i) (*db)[i] += g[i] * A[i];
                   });
}

Var add_rowwise(Var m, Var v) {
  Tape& tape = same_tape(m, v);
  return tape.emit(kernels::add_rowwise(m.value(), v.value()), {m, v}, [m, v](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* dm = sink(t, m)) for (std::size_t i = 0; i < g.size(); ++i) (*dm)[i] += g[i];
    if (Tensor* dv = sink(t, v)) {
      const std::size_t c = dv->size();
      for (std::size_t i = 0; i < g.size(); ++i) (*dv)[i % c] += g[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& x : out.values()) x *= factor;
  return a.tape().emit(std::move(out), {a}, [a, factor](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* da = sink(t, a)) for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += factor * g[i];
  });
}

Var sigmoid(Var x) {
  return x.tape().emit(kernels::sigmoid(x.value()), {x}, [x](Tape& t, const Tensor& y, const Tensor& g) {
    if (Tensor* dx = sink(t, x)) for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var x) {
  return x.tape().emit(kernels::tanh(x.value()), {x}, [x](Tape& t, const Tensor& y, const Tensor& g) {
    if (Tensor* dx = sink(t, x)) for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax(Var x) {
  return x.tape().emit(kernels::softmax(x.value()), {x}, [x](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor* dx = sink(t, x);
    if (!dx) return;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += y[i] * (g[i] - dot);
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& z = logits.value();
  if (z.rank() != 1 || target >= z.size()) {
    throw DimensionError("cross_entropy: target " + std::to_string(target) + " out of range for logits " +
                         shape_string(z.shape()));
  }
  Tensor loss(Shape{});
  loss[0] = kernels::logsumexp(z) - z[target];
  Tensor probs = kernels::softmax(z);
  return logits.tape().emit(std::move(loss), {logits},
                            [logits, target, probs = std::move(probs)](Tape& t, const Tensor&, const Tensor& g) {
                              Tensor* dz = sink(t, logits);
                              if (!dz) return;
                              for (std::size_t i = 0; i < probs.size(); ++i) (*dz)[i] += g[0] * probs[i];
                              (*dz)[target] -= g[0];
                            });
}

Var conv1d(Var signal, Var filter) {
  Tape& tape = same_tape(signal, filter);
  return tape.emit(kernels::conv1d(signal.value(), filter.value()), {signal, filter},
                   [signal, filter](Tape& t, const Tensor&, const Tensor& g) {
                     const Tensor& S = signal.value();
                     const Tensor& F = filter.value();
                     const std::size_t len = S.shape()[0], cin = S.shape()[1];
                     const std::size_t width = F.shape()[0], cout = F.shape()[2];
                     const auto half = static_cast<std::ptrdiff_t>(width / 2);
                     Tensor* ds = sink(t, signal);
                     Tensor* df = sink(t, filter);
                     for (std::size_t i = 0; i < len; ++i) {
                       const double* gi = g.data() + i * cout;
                       for (std::size_t k = 0; k < width; ++k) {
                         const auto src = static_cast<std::ptrdiff_t>(i + k) - half;
                         if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                         const auto s = static_cast<std::size_t>(src);
                         for (std::size_t a = 0; a < cin; ++a) {
                           const std::size_t fo = (k * cin + a) * cout;
                           if (ds) {
                             double acc = 0.0;
                             for (std::size_t b = 0; b < cout; ++b) acc += gi[b] * F[fo + b];
                             (*ds)[s * cin + a] += acc;
                           }
                           if (df) {
                             const double sv = S[s * cin + a];
                             for (std::size_t b = 0; b < cout; ++b) (*df)[fo + b] += sv * gi[b];
                           }
                         }
                       }
                     }
                   });
}

Var embed(Var e, std::size_t index) {
  return e.tape().emit(kernels::embed(e.value(), index), {e}, [e, index](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* de = sink(t, e)) {
      double* row = de->data() + index * g.size();
      for (std::size_t j = 0; j < g.size(); ++j) row[j] += g[j];
    }
  });
}

Var gru_blend(Var z, Var h_prev, Var h_candidate) {
  Tape& tape = same_tape(z, h_prev);
  same_tape(z, h_candidate);
  const Tensor& Z = z.value();
  const Tensor& H = h_prev.value();
  const Tensor& C = h_candidate.value();
  if (Z.shape() != H.shape()) mismatch("gru_blend", Z, H);
  if (Z.shape() != C.shape()) mismatch("gru_blend", Z, C);
  Tensor out(Z.shape());
  for (std::size_t i = 0; i < Z.size(); ++i) out[i] = (1.0 - Z[i]) * H[i] + Z[i] * C[i];
  return tape.emit(std::move(out), {z, h_prev, h_candidate},
                   [z, h_prev, h_candidate](Tape& t, const Tensor&, const Tensor& g) {
                     const Tensor& Z = z.value();
                     const Tensor& H = h_prev.value();
                     const Tensor& C = h_candidate.value();
                     if (Tensor* dz = sink(t, z)) for (std::size_t i = 0; i < g.size(); ++i) (*dz)[i] += g[i] * (C[i] - H[i]);
                     if (Tensor* dh = sink(t, h_prev)) for (std::size_t i = 0; i < g.size(); ++i) (*dh)[i] += g[i] * (1.0 - Z[i]);
                     if (Tensor* dc = sink(t, h_candidate)) for (std::size_t i = 0; i < g.size(); ++i) (*dc)[i] += g[i] * Z[i];
                   });
}

Var row(Var m, std::size_t r) {
  const Tensor& M = m.value();
  if (M.rank() != 2 || r >= M.shape()[0]) {
    throw DimensionError("row " + std::to_string(r) + " out of range for " + shape_string(M.shape()));
  }
  const auto span = M.row(r);
  return m.tape().emit(Tensor({span.size()}, std::vector<double>(span.begin(), span.end())), {m},
                       [m, r](Tape& t, const Tensor&, const Tensor& g) {
                         if (Tensor* dm = sink(t, m)) {
                           double* dst = dm->data() + r * g.size();
                           for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
                         }
                       });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows of an empty list");
  Tape& tape = rows.front().tape();
  const std::size_t c = rows.front().size();
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& v = rows[i].value();
    if (v.rank() != 1 || v.size() != c) mismatch("stack_rows", rows.front().value(), v);
    std::copy(v.values().begin(), v.values().end(), out.data() + i * c);
  }
  std::vector<Var> parents(rows.begin(), rows.end());
  return tape.emit(std::move(out), rows, [parents](Tape& t, const Tensor&, const Tensor& g) {
    const std::size_t c = g.cols();
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (Tensor* d = sink(t, parents[i])) {
        const double* src = g.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) (*d)[j] += src[j];
      }
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.shape()[0] != B.shape()[0]) mismatch("concat_cols", A, B);
  const std::size_t rows = A.shape()[0], ca = A.shape()[1], cb = B.shape()[1];
  Tensor out({rows, ca + cb});
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(A.data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(B.data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  return tape.emit(std::move(out), {a, b}, [a, b, rows, ca, cb](Tape& t, const Tensor&, const Tensor& g) {
    Tensor* da = sink(t, a);
    Tensor* db = sink(t, b);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* src = g.data() + i * (ca + cb);
      if (da) for (std::size_t j = 0; j < ca; ++j) (*da)[i * ca + j] += src[j];
      if (db) for (std::size_t j = 0; j < cb; ++j) (*db)[i * cb + j] += src[ca + j];
    }
  });
}

Var as_column(Var v) {
  const Tensor& V = v.value();
  if (V.rank() != 1) throw DimensionError("as_column expects a vector, got " + shape_string(V.shape()));
  Tensor out({V.size(), 1}, std::vector<double>(V.values().begin(), V.values().end()));
  return v.tape().emit(std::move(out), {v}, [v](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* dv = sink(t, v)) for (std::size_t i = 0; i < g.size(); ++i) (*dv)[i] += g[i];
  });
}

Var pool_rows(Var m, std::size_t stride, PoolMode mode) {
  const Tensor& M = m.value();
  if (M.rank() != 2) throw DimensionError("pool_rows expects a matrix, got " + shape_string(M.shape()));
  if (stride == 0) throw ContractError("pool_rows stride must be at least 1");
  const std::size_t rows = M.shape()[0], c = M.shape()[1];
  const std::size_t out_rows = (rows + stride - 1) / stride;
  Tensor out({out_rows, c});
  // For max pooling, the source row that won each output element.
  std::vector<std::size_t> winner(mode == PoolMode::kMax ? out_rows * c : 0);
  for (std::size_t j = 0; j < out_rows; ++j) {
    const std::size_t begin = j * stride, end = std::min(begin + stride, rows);
    for (std::size_t k = 0; k < c; ++k) {
      switch (mode) {
        case PoolMode::kMax: {
          std::size_t best = begin;
          for (std::size_t i = begin + 1; i < end; ++i) {
            if (M[i * c + k] > M[best * c + k]) best = i;
          }
          out[j * c + k] = M[best * c + k];
          winner[j * c + k] = best;
          break;
        }
        case PoolMode::kMean: {
          double acc = 0.0;
          for (std::size_t i = begin; i < end; ++i) acc += M[i * c + k];
          out[j * c + k] = acc / static_cast<double>(end - begin);
          break;
        }
        case PoolMode::kSubsample:
          out[j * c + k] = M[begin * c + k];
          break;
      }
    }
  }
  return m.tape().emit(std::move(out), {m},
                       [m, stride, mode, rows, c, winner = std::move(winner)](Tape& t, const Tensor&, const Tensor& g) {
                         Tensor* dm = sink(t, m);
                         if (!dm) return;
                         const std::size_t out_rows = g.shape()[0];
                         for (std::size_t j = 0; j < out_rows; ++j) {
                           const std::size_t begin = j * stride, end = std::min(begin + stride, rows);
                           for (std::size_t k = 0; k < c; ++k) {
                             const double gk = g[j * c + k];
                             switch (mode) {
                               case PoolMode::kMax:
                                 (*dm)[winner[j * c + k] * c + k] += gk;
                                 break;
                               case PoolMode::kMean:
                                 for (std::size_t i = begin; i < end; ++i) {
                                   (*dm)[i * c + k] += gk / static_cast<double>(end - begin);
                                 }
                                 break;
                               case PoolMode::kSubsample:
                                 (*dm)[begin * c + k] += gk;
                                 break;
                             }
                           }
                         }
                       });
}

Var mean_rows(Var m) {
  const Tensor& M = m.value();
  if (M.rank() != 2 || M.shape()[0] == 0) throw DimensionError("mean_rows expects a non-empty matrix, got " + shape_string(M.shape()));
  const std::size_t rows = M.shape()[0], c = M.shape()[1];
  Tensor out({c});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < c; ++k) out[k] += M[i * c + k];
  }
  for (auto& v : out.values()) v /= static_cast<double>(rows);
  return m.tape().emit(std::move(out), {m}, [m, rows, c](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* dm = sink(t, m)) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < c; ++k) (*dm)[i * c + k] += g[k] / static_cast<double>(rows);
      }
    }
  });
}

Var sum(Var x) {
  Tensor out(Shape{});
  for (double v : x.value().values()) out[0] += v;
  return x.tape().emit(std::move(out), {x}, [x](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* dx = sink(t, x)) for (auto& v : dx->values()) v += g[0];
  });
}

}  // namespace ink2tex
