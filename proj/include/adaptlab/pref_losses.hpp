#pragma once

#include <string>
#include <vector>

#include "adaptlab/model.hpp"

namespace adaptlab {

struct PrefLossConfig {
  double beta = 0.1;           // margin scale
  double lambda_penalty = 0.0; // DPO-P hinge / ORPO ratio weight
  double gamma_margin = 0.0;   // SimPO target reward margin
};

struct PreferenceExample {
  std::vector<int> prompt;
  std::vector<int> chosen;
  std::vector<int> rejected;
};

// -log sigmoid(beta * ((lp_w - ref_w) - (lp_l - ref_l))).
double dpo_loss(double lp_w, double lp_l, double ref_w, double ref_l,
                const PrefLossConfig& cfg);

// DPO with the hinge penalty inside the sigmoid argument, unscaled by beta:
// -log sigmoid(beta * margin - lambda * max(0, ref_w - lp_w)).
double dpop_loss(double lp_w, double lp_l, double ref_w, double ref_l,
                 const PrefLossConfig& cfg);

// nll + lambda * (lp_w - lp_l).
double orpo_loss(double nll, double lp_w, double lp_l, const PrefLossConfig& cfg);

// -log sigmoid(beta * (lp_w/len_w - lp_l/len_l - gamma)). Throws on zero
// lengths.
double simpo_loss(double lp_w, double lp_l, long long len_w, long long len_l,
                  const PrefLossConfig& cfg);

enum class PrefMethod { dpo, dpop, orpo, simpo };

PrefMethod pref_method_from_string(const std::string& name);
std::string pref_method_name(PrefMethod method);
bool pref_method_needs_reference(PrefMethod method);

// Batch-mean loss of the chosen method, with sequence log-probs computed by
// the model. ref_params may be null for the reference-free methods (orpo,
// simpo) and is required otherwise. For ORPO the NLL term is the mean
// per-token NLL of the preferred response, -lp_w / |y_w|.
double pref_loss_batch(const std::vector<PreferenceExample>& batch, const ModelParams& params,
                       const ModelParams* ref_params, PrefMethod method,
                       const PrefLossConfig& cfg);

// Same value, plus exact gradients of the batch-mean loss accumulated into
// grads (reference-model log-probs treated as constants).
double pref_gradients(const std::vector<PreferenceExample>& batch, const ModelParams& params,
                      const ModelParams* ref_params, PrefMethod method,
                      const PrefLossConfig& cfg, ModelParams& grads);

// Line format: three tab-separated fields (prompt, chosen, rejected), each
// a space-separated token-id list. Throws with the line number on any
// malformed record.
std::vector<PreferenceExample> load_preference_dataset(const std::string& path);
void save_preference_dataset(const std::vector<PreferenceExample>& data, const std::string& path);

}  // namespace adaptlab
