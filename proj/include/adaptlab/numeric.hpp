#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace adaptlab {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit floats. Dimensions are fixed at
// construction; element values are mutable.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  Vector row(std::size_t r) const {
    return Vector(row_ptr(r), row_ptr(r) + cols_);
  }
  void set_row(std::size_t r, const Vector& v);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Numerically stable softmax (max-subtraction). Throws on empty input.
Vector softmax(const Vector& z);

// log softmax of z, same stability scheme as softmax().
Vector log_softmax(const Vector& z);

// Stable sigmoid, exact in both tails.
double sigmoid(double x);

// ln(sigmoid(x)) computed as -softplus(-x); stays finite for |x| <= 700.
double log_sigmoid(double x);

// Euclidean projection of z onto the probability simplex by the
// sort-and-threshold algorithm. Output sums to 1, support may be a strict
// subset of the input indices. Throws on empty input.
Vector sparsemax(const Vector& z);

// x_i * gain_i / sqrt(mean(x^2) + eps). Throws on dim mismatch, negative
// eps, or a zero denominator (all-zero input with eps == 0).
Vector rmsnorm(const Vector& x, const Vector& gain, double eps);

// Elementwise swish(a_i) * b_i with swish(t) = t * sigmoid(t).
Vector swiglu(const Vector& a, const Vector& b);

// Rotates a 2-d pair by angle position * theta_base^(-2*pair_index/dim).
// dim must be even and 0 <= pair_index < dim/2.
std::array<double, 2> rope_rotate(const std::array<double, 2>& pair, long position,
                                  double theta_base, std::size_t pair_index,
                                  std::size_t dim);

double dot(const Vector& a, const Vector& b);
double l2_norm(const Vector& v);

}  // namespace adaptlab
