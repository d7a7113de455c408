#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "adaptlab/model.hpp"

namespace adaptlab {

// Layer index plan for depth up-scaling. source_indices[i] names the source
// layer copied into position i of the result.
struct LayerPlan {
  std::vector<std::size_t> source_indices;
  std::size_t n = 0;  // source depth
  std::size_t m = 0;  // overlap-removal count
  std::size_t k = 0;  // outermost duplication count per end

  std::size_t result_depth() const { return source_indices.size(); }

  // One-line text form: "n m k: i0,i1,...".
  std::string to_text() const;
  static LayerPlan from_text(const std::string& line);
};

// Two stacked copies of the source with the overlap removed: the first copy
// keeps layers [0, n-m), the second keeps [m, n). Result depth 2(n-m).
LayerPlan dus_plan(std::size_t n, std::size_t m);

// Prepends k copies of the first entry and appends k copies of the last.
LayerPlan outermost_duplicate(const LayerPlan& plan, std::size_t k);

// Builds a new parameter set whose layer i is a deep copy of source layer
// plan.source_indices[i]; embeddings and head are copied unchanged.
ModelParams apply_plan(const ModelParams& params, const LayerPlan& plan);

// Trainable = embeddings plus the given layer positions; everything else
// (remaining layers and the head) frozen.
FreezeMask adaptation_freeze_mask(const LayerPlan& plan,
                                  const std::set<std::size_t>& duplicated_positions);

// Positions introduced by outermost_duplicate: the first k and last k of
// the plan (empty when k == 0).
std::set<std::size_t> outer_duplicate_positions(const LayerPlan& plan);

}  // namespace adaptlab
