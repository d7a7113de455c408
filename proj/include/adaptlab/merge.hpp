#pragma once

#include <string>
#include <vector>

#include "adaptlab/model.hpp"

namespace adaptlab {

struct MergeSpec {
  std::vector<std::string> inputs;  // checkpoint paths
  std::vector<double> weights;      // same length, sums to 1 within 1e-12
};

// Elementwise sum_i w_i * param_i over shape-identical models, computed in
// 64-bit with fixed (input-order) summation. Throws when the weight sum
// deviates from 1 by more than 1e-12 or shapes differ.
ModelParams linear_merge(const std::vector<ModelParams>& models,
                         const std::vector<double>& weights);

// JSON spec file: {"inputs": [...], "weights": [...]}.
MergeSpec load_merge_spec(const std::string& path);

}  // namespace adaptlab
