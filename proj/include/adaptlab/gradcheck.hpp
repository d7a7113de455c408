#pragma once

#include <functional>

#include "adaptlab/model.hpp"

namespace adaptlab {

// Central-difference gradient of value_fn over every parameter.
ModelParams finite_difference_gradient(const ModelParams& params,
                                       const std::function<double(const ModelParams&)>& value_fn,
                                       double step);

// ||a - b||_2 / max(||a||_2, ||b||_2, 1e-12) over all parameters.
double gradient_relative_error(const ModelParams& analytic, const ModelParams& numeric);

}  // namespace adaptlab
