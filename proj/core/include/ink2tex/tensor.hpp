#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ink2tex {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major tensor of doubles. Rank 1 is a vector, rank 2 a matrix (rows x cols),
/// rank 3 is used for convolution filters (width x in x out).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  /// Product of all dimensions after the first.
  std::size_t cols() const;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Forward kernels. Every one of them validates shapes and throws DimensionError naming both
/// operand shapes on mismatch.
namespace kernels {

/// (r x k) * (k x c)
Tensor matmul(const Tensor& a, const Tensor& b);
/// W (r x c) times x (c)
Tensor matvec(const Tensor& w, const Tensor& x);
/// M^T v for M (r x c), v (r)
Tensor matvec_transposed(const Tensor& m, const Tensor& v);
/// X (T x c) times W^T for W (h x c): applies W to every row of X.
Tensor linear_rows(const Tensor& x, const Tensor& w);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
/// Adds vector v to every row of M.
Tensor add_rowwise(const Tensor& m, const Tensor& v);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Max-shifted softmax over a vector.
Tensor softmax(const Tensor& x);
/// log(sum(exp(x))) computed stably.
double logsumexp(const Tensor& x);

/// Same-padded 1-D convolution (cross-correlation): signal L x c_in, filter w x c_in x c_out
/// with odd w, result L x c_out.
Tensor conv1d(const Tensor& signal, const Tensor& filter);

/// Row `index` of E (K x m).
Tensor embed(const Tensor& e, std::size_t index);

}  // namespace kernels
}  // namespace ink2tex
