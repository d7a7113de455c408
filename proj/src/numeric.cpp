#include "adaptlab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adaptlab {

void Matrix::set_row(std::size_t r, const Vector& v) {
  if (v.size() != cols_) {
    throw std::invalid_argument("Matrix::set_row: length mismatch");
  }
  std::copy(v.begin(), v.end(), row_ptr(r));
}

Vector softmax(const Vector& z) {
  if (z.empty()) {
    throw std::invalid_argument("softmax: empty input");
  }
  double m = *std::max_element(z.begin(), z.end());
  Vector out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vector log_softmax(const Vector& z) {
  if (z.empty()) {
    throw std::invalid_argument("log_softmax: empty input");
  }
  double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  double lse = m + std::log(sum);
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  // -softplus(-x) = min(x, 0) - log1p(exp(-|x|))
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

Vector sparsemax(const Vector& z) {
  if (z.empty()) {
    throw std::invalid_argument("sparsemax: empty input");
  }
  Vector sorted = z;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // Largest k with 1 + k*z_(k) > cumulative sum of the top-k entries.
  double cumsum = 0.0;
  double tau = 0.0;
  std::size_t support = 0;
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    double zk = sorted[k - 1];
    if (1.0 + static_cast<double>(k) * zk > cumsum + zk) {
      cumsum += zk;
      support = k;
      tau = (cumsum - 1.0) / static_cast<double>(k);
    } else {
      break;
    }
  }
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::max(z[i] - tau, 0.0);
  }
  return out;
}

Vector rmsnorm(const Vector& x, const Vector& gain, double eps) {
  if (x.size() != gain.size()) {
    throw std::invalid_argument("rmsnorm: dim mismatch");
  }
  if (eps < 0.0) {
    throw std::invalid_argument("rmsnorm: negative eps");
  }
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= static_cast<double>(x.size());
  double denom = std::sqrt(ms + eps);
  if (denom == 0.0) {
    throw std::invalid_argument("rmsnorm: zero input with eps == 0");
  }
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] * gain[i] / denom;
  }
  return out;
}

Vector swiglu(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("swiglu: dim mismatch");
  }
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] * sigmoid(a[i]) * b[i];
  }
  return out;
}

std::array<double, 2> rope_rotate(const std::array<double, 2>& pair, long position,
                                  double theta_base, std::size_t pair_index,
                                  std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw std::invalid_argument("rope_rotate: dim must be even and positive");
  }
  if (pair_index >= dim / 2) {
    throw std::invalid_argument("rope_rotate: pair_index out of range");
  }
  double exponent = -2.0 * static_cast<double>(pair_index) / static_cast<double>(dim);
  double angle = static_cast<double>(position) * std::pow(theta_base, exponent);
  double c = std::cos(angle);
  double s = std::sin(angle);
  return {pair[0] * c - pair[1] * s, pair[0] * s + pair[1] * c};
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: dim mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const Vector& v) {
  return std::sqrt(dot(v, v));
}

}  // namespace adaptlab
