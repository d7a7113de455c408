#include "adaptlab/merge.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace adaptlab {

ModelParams linear_merge(const std::vector<ModelParams>& models,
                         const std::vector<double>& weights) {
  if (models.empty()) {
    throw std::invalid_argument("linear_merge: no input models");
  }
  if (models.size() != weights.size()) {
    throw std::invalid_argument("linear_merge: weight count (" +
                                std::to_string(weights.size()) + ") does not match model count (" +
                                std::to_string(models.size()) + ")");
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("linear_merge: weights sum to " + std::to_string(sum) +
                                ", expected 1");
  }
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (!same_shape(models[0], models[i])) {
      throw std::invalid_argument("linear_merge: model " + std::to_string(i) +
                                  " has a different shape than model 0");
    }
  }

  ModelParams out = zeros_like(models[0]);
  std::vector<double*> out_slots;
  out_slots.reserve(out.parameter_count());
  for_each_param(out, [&](double& v) { out_slots.push_back(&v); });
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double w = weights[i];
    std::size_t slot = 0;
    for_each_param(models[i], [&](double v) { *out_slots[slot++] += w * v; });
  }
  return out;
}

MergeSpec load_merge_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("merge spec: cannot open " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (!doc.is_object() || !doc.contains("inputs") || !doc.contains("weights")) {
    throw std::runtime_error("merge spec: expected object with \"inputs\" and \"weights\"");
  }
  MergeSpec spec;
  for (const auto& v : doc.at("inputs")) spec.inputs.push_back(v.get<std::string>());
  for (const auto& v : doc.at("weights")) spec.weights.push_back(v.get<double>());
  if (spec.inputs.size() != spec.weights.size() || spec.inputs.empty()) {
    throw std::runtime_error("merge spec: inputs and weights must be nonempty and equal length");
  }
  return spec;
}

}  // namespace adaptlab
