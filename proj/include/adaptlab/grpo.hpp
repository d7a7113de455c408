#pragma once

#include <functional>
#include <vector>

#include "adaptlab/model.hpp"
#include "adaptlab/rng.hpp"

namespace adaptlab {

struct GRPOConfig {
  std::size_t group_size = 8;    // G
  double epsilon_clip = 0.2;     // ratio clip half-width
  double kl_coeff = 0.001;       // weight of the KL penalty
  double lr = 1e-6;
  double sigma_tolerance = 1e-8; // zero-variance guard for advantages
  std::size_t response_len = 2;  // rollout length per sample
};

void validate(const GRPOConfig& cfg);

struct GroupStats {
  double mu = 0.0;
  double sigma = 0.0;  // population convention (divide by G)
};

GroupStats group_stats(const std::vector<double>& rewards);

// (R_i - mu) / sigma with population sigma; all zeros when sigma < tol.
// Requires at least two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, double tol);

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A). Requires ratio > 0.
double clipped_term(double ratio, double advantage, double eps);

struct RolloutGroup {
  std::vector<int> prompt;
  std::vector<std::vector<int>> responses;
  std::vector<double> rewards;
  std::vector<double> lp_old;
  std::vector<double> lp_current;
  std::vector<double> lp_ref;
};

// Mean clipped surrogate over the group; ratios are
// exp(lp_current - lp_old), advantages from group_advantages.
double grpo_objective(const RolloutGroup& group, const GRPOConfig& cfg);

// Low-variance estimator exp(d) - d - 1 with d = lp_ref - lp_current,
// averaged over the group. Always >= 0.
double kl_penalty_k3(const std::vector<double>& lp_current, const std::vector<double>& lp_ref);

using RewardFn = std::function<double(const std::vector<int>&, const std::vector<int>&)>;

// Samples G responses per prompt from the old policy with rewards, old- and
// reference-policy log-probs filled in; lp_current is left empty.
std::vector<RolloutGroup> sample_rollouts(const ModelParams& old_params,
                                          const ModelParams& ref_params,
                                          const std::vector<std::vector<int>>& prompts,
                                          const RewardFn& reward_fn, const GRPOConfig& cfg,
                                          RngStream& rng);

// Total objective L(theta) - kl_coeff * KL at the given params over fixed
// rollouts, averaged over groups; fills lp_current in each group.
double grpo_total_value(const ModelParams& params, std::vector<RolloutGroup>& groups,
                        const GRPOConfig& cfg);

// Same value; also accumulates d(total)/d(params) into grads.
double grpo_total_backward(const ModelParams& params, std::vector<RolloutGroup>& groups,
                           const GRPOConfig& cfg, ModelParams& grads);

struct GRPOStepMetrics {
  double mean_reward = 0.0;
  double objective = 0.0;   // clipped surrogate (before KL penalty)
  double kl = 0.0;
  double clip_fraction = 0.0;
  double total = 0.0;       // objective - kl_coeff * kl
};

// One GRPO update: rollouts from the old policy, group-normalized
// advantages, clipped surrogate minus the KL penalty, and an AdamW ascent
// step on the negated total. Deterministic given the stream.
GRPOStepMetrics grpo_step(ModelParams& params, const ModelParams& ref_params,
                          const ModelParams& old_params,
                          const std::vector<std::vector<int>>& prompts,
                          const RewardFn& reward_fn, const GRPOConfig& cfg,
                          AdamWState& opt_state, RngStream& rng);

// Single-digit addition task over the toy vocabulary:
//   id 0        separator/pad (reserved)
//   ids 1..10   digits 0..9
//   id 11       '+'
//   id 12       '='
namespace arith {

constexpr int kDigitBase = 1;
constexpr int kPlus = 11;
constexpr int kEquals = 12;
constexpr std::size_t kVocab = 13;

std::vector<int> make_prompt(int a, int b);
std::vector<int> sum_tokens(int a, int b);

}  // namespace arith

// 1 when the response consists of digit tokens spelling the prompt's sum
// (leading zeros allowed), else 0. Throws on a malformed prompt.
double arithmetic_reward(const std::vector<int>& prompt, const std::vector<int>& response);

}  // namespace adaptlab
