#include "adaptlab/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace adaptlab {

ModelParams finite_difference_gradient(const ModelParams& params,
                                       const std::function<double(const ModelParams&)>& value_fn,
                                       double step) {
  if (step <= 0.0) {
    throw std::invalid_argument("finite_difference_gradient: step must be positive");
  }
  ModelParams probe = params;
  std::vector<double*> slots;
  slots.reserve(probe.parameter_count());
  for_each_param(probe, [&](double& v) { slots.push_back(&v); });

  ModelParams grad = zeros_like(params);
  std::vector<double*> grad_slots;
  grad_slots.reserve(grad.parameter_count());
  for_each_param(grad, [&](double& v) { grad_slots.push_back(&v); });

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + step;
    double plus = value_fn(probe);
    *slots[i] = saved - step;
    double minus = value_fn(probe);
    *slots[i] = saved;
    *grad_slots[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

double gradient_relative_error(const ModelParams& analytic, const ModelParams& numeric) {
  if (!same_shape(analytic, numeric)) {
    throw std::invalid_argument("gradient_relative_error: shape mismatch");
  }
  std::vector<double> flat;
  flat.reserve(analytic.parameter_count());
  for_each_param(analytic, [&](double v) { flat.push_back(v); });
  double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
  std::size_t i = 0;
  for_each_param(numeric, [&](double v) {
    double a = flat[i++];
    diff_sq += (a - v) * (a - v);
    a_sq += a * a;
    n_sq += v * v;
  });
  double denom = std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-12});
  return std::sqrt(diff_sq) / denom;
}

}  // namespace adaptlab
