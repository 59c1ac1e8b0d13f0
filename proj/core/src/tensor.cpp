#include "ink2tex/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "ink2tex/errors.hpp"

namespace ink2tex {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(data_.size()) +
                         " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::cols() const {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  return data_.size() / shape_[0];
}

std::span<double> Tensor::row(std::size_t r) {
  const auto c = cols();
  return {data_.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto c = cols();
  return {data_.data() + r * c, c};
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace kernels {
namespace {

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                       " do not conform");
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
  }
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) mismatch("matmul", a, b);
  const std::size_t r = a.shape()[0], k = a.shape()[1], c = b.shape()[1];
  Tensor out({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    double* o = out.data() + i * c;
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = a[i * k + j];
      const double* brow = b.data() + j * c;
      for (std::size_t l = 0; l < c; ++l) o[l] += aij * brow[l];
    }
  }
  return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.shape()[1] != x.size()) mismatch("matvec", w, x);
  const std::size_t r = w.shape()[0], c = w.shape()[1];
  Tensor out({r});
  for (std::size_t i = 0; i < r; ++i) {
    const double* wr = w.data() + i * c;
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += wr[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Tensor matvec_transposed(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.shape()[0] != v.size()) mismatch("matvec_transposed", m, v);
  const std::size_t r = m.shape()[0], c = m.shape()[1];
  Tensor out({c});
  for (std::size_t i = 0; i < r; ++i) {
    const double vi = v[i];
    const double* mr = m.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) out[j] += vi * mr[j];
  }
  return out;
}

Tensor linear_rows(const Tensor& x, const Tensor& w) {
  if (x.rank() != 2 || w.rank() != 2 || x.shape()[1] != w.shape()[1]) mismatch("linear_rows", x, w);
  const std::size_t t = x.shape()[0], c = x.shape()[1], h = w.shape()[0];
  Tensor out({t, h});
  for (std::size_t i = 0; i < t; ++i) {
    const double* xr = x.data() + i * c;
    for (std::size_t k = 0; k < h; ++k) {
      const double* wr = w.data() + k * c;
      double acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) acc += wr[j] * xr[j];
      out[i * h + k] = acc;
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("elementwise_mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor add_rowwise(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.shape()[1] != v.size()) mismatch("add_rowwise", m, v);
  Tensor out = m;
  const std::size_t c = v.size();
  for (std::size_t i = 0; i < m.shape()[0]; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += v[j];
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) { return map(x, [](double v) { return sigmoid(v); }); }

Tensor tanh(const Tensor& x) { return map(x, [](double v) { return std::tanh(v); }); }

Tensor softmax(const Tensor& x) {
  require_rank("softmax", x, 1);
  if (x.empty()) throw DimensionError("softmax of an empty vector");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  Tensor out(x.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= sum;
  return out;
}

double logsumexp(const Tensor& x) {
  if (x.empty()) throw DimensionError("logsumexp of an empty tensor");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double sum = 0.0;
  for (double v : x.values()) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

Tensor conv1d(const Tensor& signal, const Tensor& filter) {
  if (signal.rank() != 2 || filter.rank() != 3 || filter.shape()[1] != signal.shape()[1]) {
    mismatch("conv1d", signal, filter);
  }
  const std::size_t width = filter.shape()[0];
  if (width % 2 == 0) throw DimensionError("conv1d: filter width must be odd, got " + shape_string(filter.shape()));
  const std::size_t len = signal.shape()[0], cin = signal.shape()[1], cout = filter.shape()[2];
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
  Tensor out({len, cout});
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      for (std::size_t a = 0; a < cin; ++a) {
        const double s = signal[static_cast<std::size_t>(src) * cin + a];
        const double* f = filter.data() + (k * cin + a) * cout;
        for (std::size_t b = 0; b < cout; ++b) out[i * cout + b] += s * f[b];
      }
    }
  }
  return out;
}

Tensor embed(const Tensor& e, std::size_t index) {
  require_rank("embed", e, 2);
  if (index >= e.shape()[0]) {
    throw DimensionError("embed: index " + std::to_string(index) + " out of range for " + shape_string(e.shape()));
  }
  const auto r = e.row(index);
  return Tensor({r.size()}, std::vector<double>(r.begin(), r.end()));
}

}  // namespace kernels
}  // namespace ink2tex
