#include "adaptlab/upscale.hpp"

#include <sstream>
#include <stdexcept>

namespace adaptlab {

std::string LayerPlan::to_text() const {
  std::ostringstream out;
  out << n << ' ' << m << ' ' << k << ':';
  for (std::size_t i = 0; i < source_indices.size(); ++i) {
    out << (i == 0 ? " " : ",") << source_indices[i];
  }
  return out.str();
}

LayerPlan LayerPlan::from_text(const std::string& line) {
  auto colon = line.find(':');
  if (colon == std::string::npos) {
    throw std::runtime_error("LayerPlan: missing ':' in \"" + line + "\"");
  }
  LayerPlan plan;
  {
    std::istringstream head(line.substr(0, colon));
    if (!(head >> plan.n >> plan.m >> plan.k)) {
      throw std::runtime_error("LayerPlan: malformed header in \"" + line + "\"");
    }
  }
  std::istringstream tail(line.substr(colon + 1));
  std::string piece;
  while (std::getline(tail, piece, ',')) {
    if (piece.empty()) continue;
    plan.source_indices.push_back(std::stoull(piece));
  }
  for (std::size_t idx : plan.source_indices) {
    if (idx >= plan.n) {
      throw std::runtime_error("LayerPlan: index out of range in \"" + line + "\"");
    }
  }
  return plan;
}

LayerPlan dus_plan(std::size_t n, std::size_t m) {
  if (m >= n) {
    throw std::invalid_argument("dus_plan: require 0 <= m < n");
  }
  LayerPlan plan;
  plan.n = n;
  plan.m = m;
  plan.k = 0;
  plan.source_indices.reserve(2 * (n - m));
  for (std::size_t i = 0; i < n - m; ++i) plan.source_indices.push_back(i);
  for (std::size_t i = m; i < n; ++i) plan.source_indices.push_back(i);
  return plan;
}

LayerPlan outermost_duplicate(const LayerPlan& plan, std::size_t k) {
  if (plan.source_indices.empty()) {
    throw std::invalid_argument("outermost_duplicate: empty plan");
  }
  LayerPlan out = plan;
  out.k = plan.k + k;
  out.source_indices.clear();
  out.source_indices.reserve(plan.source_indices.size() + 2 * k);
  for (std::size_t i = 0; i < k; ++i) out.source_indices.push_back(plan.source_indices.front());
  out.source_indices.insert(out.source_indices.end(), plan.source_indices.begin(),
                            plan.source_indices.end());
  for (std::size_t i = 0; i < k; ++i) out.source_indices.push_back(plan.source_indices.back());
  return out;
}

ModelParams apply_plan(const ModelParams& params, const LayerPlan& plan) {
  for (std::size_t idx : plan.source_indices) {
    if (idx >= params.depth()) {
      throw std::invalid_argument("apply_plan: source index out of range");
    }
  }
  ModelParams out;
  out.vocab = params.vocab;
  out.dim = params.dim;
  out.hidden = params.hidden;
  out.embeddings = params.embeddings;
  out.head = params.head;
  out.layers.reserve(plan.source_indices.size());
  for (std::size_t idx : plan.source_indices) {
    out.layers.push_back(params.layers[idx]);  // value copy, independently mutable
  }
  return out;
}

FreezeMask adaptation_freeze_mask(const LayerPlan& plan,
                                  const std::set<std::size_t>& duplicated_positions) {
  for (std::size_t pos : duplicated_positions) {
    if (pos >= plan.result_depth()) {
      throw std::invalid_argument("adaptation_freeze_mask: position out of range");
    }
  }
  FreezeMask mask;
  mask.embeddings = true;
  mask.head = false;
  mask.layers.assign(plan.result_depth(), false);
  for (std::size_t pos : duplicated_positions) mask.layers[pos] = true;
  return mask;
}

std::set<std::size_t> outer_duplicate_positions(const LayerPlan& plan) {
  std::set<std::size_t> out;
  std::size_t s = plan.result_depth();
  for (std::size_t i = 0; i < plan.k && i < s; ++i) {
    out.insert(i);
    out.insert(s - 1 - i);
  }
  return out;
}

}  // namespace adaptlab
