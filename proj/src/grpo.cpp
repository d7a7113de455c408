#include "adaptlab/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adaptlab {

void validate(const GRPOConfig& cfg) {
  if (cfg.group_size < 2) throw std::invalid_argument("grpo: group_size must be >= 2");
  if (cfg.epsilon_clip <= 0.0 || cfg.epsilon_clip >= 1.0) {
    throw std::invalid_argument("grpo: epsilon_clip must lie in (0, 1)");
  }
  if (cfg.kl_coeff < 0.0) throw std::invalid_argument("grpo: kl_coeff must be >= 0");
  if (cfg.sigma_tolerance < 0.0) throw std::invalid_argument("grpo: sigma_tolerance must be >= 0");
  if (cfg.response_len == 0) throw std::invalid_argument("grpo: response_len must be positive");
}

GroupStats group_stats(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("group_stats: need at least two rewards");
  }
  GroupStats st;
  const double g = static_cast<double>(rewards.size());
  for (double r : rewards) st.mu += r;
  st.mu /= g;
  double var = 0.0;
  for (double r : rewards) var += (r - st.mu) * (r - st.mu);
  st.sigma = std::sqrt(var / g);
  return st;
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double tol) {
  GroupStats st = group_stats(rewards);
  std::vector<double> adv(rewards.size(), 0.0);
  if (st.sigma < tol) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - st.mu) / st.sigma;
  }
  return adv;
}

double clipped_term(double ratio, double advantage, double eps) {
  if (ratio <= 0.0) {
    throw std::invalid_argument("clipped_term: ratio must be positive");
  }
  double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {

void check_group(const RolloutGroup& g, const GRPOConfig& cfg, bool need_current) {
  const std::size_t G = cfg.group_size;
  if (g.responses.size() != G || g.rewards.size() != G || g.lp_old.size() != G ||
      g.lp_ref.size() != G || (need_current && g.lp_current.size() != G)) {
    throw std::invalid_argument("grpo: rollout group fields must all have length G");
  }
}

}  // namespace

double grpo_objective(const RolloutGroup& group, const GRPOConfig& cfg) {
  validate(cfg);
  check_group(group, cfg, /*need_current=*/true);
  std::vector<double> adv = group_advantages(group.rewards, cfg.sigma_tolerance);
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.group_size; ++i) {
    double ratio = std::exp(group.lp_current[i] - group.lp_old[i]);
    total += clipped_term(ratio, adv[i], cfg.epsilon_clip);
  }
  return total / static_cast<double>(cfg.group_size);
}

double kl_penalty_k3(const std::vector<double>& lp_current, const std::vector<double>& lp_ref) {
  if (lp_current.size() != lp_ref.size() || lp_current.empty()) {
    throw std::invalid_argument("kl_penalty_k3: length mismatch or empty input");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < lp_current.size(); ++i) {
    double d = lp_ref[i] - lp_current[i];
    total += std::exp(d) - d - 1.0;
  }
  return total / static_cast<double>(lp_current.size());
}

std::vector<RolloutGroup> sample_rollouts(const ModelParams& old_params,
                                          const ModelParams& ref_params,
                                          const std::vector<std::vector<int>>& prompts,
                                          const RewardFn& reward_fn, const GRPOConfig& cfg,
                                          RngStream& rng) {
  validate(cfg);
  if (prompts.empty()) {
    throw std::invalid_argument("sample_rollouts: no prompts");
  }
  std::vector<RolloutGroup> groups(prompts.size());
  for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
    RolloutGroup& g = groups[pi];
    g.prompt = prompts[pi];
    RngStream prompt_stream = rng.split(pi);
    for (std::size_t i = 0; i < cfg.group_size; ++i) {
      RngStream sample_stream = prompt_stream.split(i);
      std::vector<int> response =
          sample_response(old_params, g.prompt, cfg.response_len, sample_stream);
      g.rewards.push_back(reward_fn(g.prompt, response));
      g.lp_old.push_back(seq_logprob(old_params, g.prompt, response));
      g.lp_ref.push_back(seq_logprob(ref_params, g.prompt, response));
      g.responses.push_back(std::move(response));
    }
  }
  return groups;
}

namespace {

double grpo_total_impl(const ModelParams& params, std::vector<RolloutGroup>& groups,
                       const GRPOConfig& cfg, ModelParams* grads,
                       GRPOStepMetrics* metrics) {
  validate(cfg);
  if (groups.empty()) {
    throw std::invalid_argument("grpo: no rollout groups");
  }
  const double inv_p = 1.0 / static_cast<double>(groups.size());
  const double inv_g = 1.0 / static_cast<double>(cfg.group_size);
  double objective = 0.0;
  double kl = 0.0;
  double reward_sum = 0.0;
  long long clipped_count = 0;

  for (RolloutGroup& g : groups) {
    check_group(g, cfg, /*need_current=*/false);
    g.lp_current.assign(cfg.group_size, 0.0);
    for (std::size_t i = 0; i < cfg.group_size; ++i) {
      g.lp_current[i] = seq_logprob(params, g.prompt, g.responses[i]);
    }
    std::vector<double> adv = group_advantages(g.rewards, cfg.sigma_tolerance);
    for (std::size_t i = 0; i < cfg.group_size; ++i) {
      reward_sum += g.rewards[i];
      double ratio = std::exp(g.lp_current[i] - g.lp_old[i]);
      double unclipped = ratio * adv[i];
      double clipped = std::clamp(ratio, 1.0 - cfg.epsilon_clip, 1.0 + cfg.epsilon_clip) * adv[i];
      bool take_unclipped = unclipped <= clipped;
      objective += inv_p * inv_g * std::min(unclipped, clipped);
      if (!take_unclipped) ++clipped_count;

      double delta = g.lp_ref[i] - g.lp_current[i];
      kl += inv_p * inv_g * (std::exp(delta) - delta - 1.0);

      if (grads) {
        // d(min term)/d(lp) = ratio * A on the unclipped branch, 0 on the
        // saturated clipped branch; d(k3)/d(lp) = 1 - exp(delta).
        double coeff = 0.0;
        if (take_unclipped) coeff += unclipped;
        coeff -= cfg.kl_coeff * (1.0 - std::exp(delta));
        coeff *= inv_p * inv_g;
        if (coeff != 0.0) {
          seq_logprob_backward(params, g.prompt, g.responses[i], coeff, *grads);
        }
      }
    }
  }

  double total = objective - cfg.kl_coeff * kl;
  if (metrics) {
    metrics->mean_reward = reward_sum * inv_p * inv_g;
    metrics->objective = objective;
    metrics->kl = kl;
    metrics->clip_fraction =
        static_cast<double>(clipped_count) * inv_p * inv_g;
    metrics->total = total;
  }
  return total;
}

}  // namespace

double grpo_total_value(const ModelParams& params, std::vector<RolloutGroup>& groups,
                        const GRPOConfig& cfg) {
  return grpo_total_impl(params, groups, cfg, nullptr, nullptr);
}

double grpo_total_backward(const ModelParams& params, std::vector<RolloutGroup>& groups,
                           const GRPOConfig& cfg, ModelParams& grads) {
  return grpo_total_impl(params, groups, cfg, &grads, nullptr);
}

GRPOStepMetrics grpo_step(ModelParams& params, const ModelParams& ref_params,
                          const ModelParams& old_params,
                          const std::vector<std::vector<int>>& prompts,
                          const RewardFn& reward_fn, const GRPOConfig& cfg,
                          AdamWState& opt_state, RngStream& rng) {
  std::vector<RolloutGroup> groups =
      sample_rollouts(old_params, ref_params, prompts, reward_fn, cfg, rng);
  ModelParams grads = zeros_like(params);
  GRPOStepMetrics metrics;
  grpo_total_impl(params, groups, cfg, &grads, &metrics);
  // Ascend the total: AdamW minimizes, so feed the negated gradient.
  for_each_param(grads, [](double& v) { v = -v; });
  adamw_step(params, grads, opt_state, cfg.lr);
  return metrics;
}

namespace arith {

std::vector<int> make_prompt(int a, int b) {
  if (a < 0 || a > 9 || b < 0 || b > 9) {
    throw std::invalid_argument("arith: operands must be single digits");
  }
  return {kDigitBase + a, kPlus, kDigitBase + b, kEquals};
}

std::vector<int> sum_tokens(int a, int b) {
  if (a < 0 || a > 9 || b < 0 || b > 9) {
    throw std::invalid_argument("arith: operands must be single digits");
  }
  int sum = a + b;
  std::vector<int> out;
  if (sum >= 10) out.push_back(kDigitBase + sum / 10);
  out.push_back(kDigitBase + sum % 10);
  return out;
}

}  // namespace arith

double arithmetic_reward(const std::vector<int>& prompt, const std::vector<int>& response) {
  auto is_digit = [](int t) { return t >= arith::kDigitBase && t < arith::kDigitBase + 10; };
  if (prompt.size() != 4 || !is_digit(prompt[0]) || prompt[1] != arith::kPlus ||
      !is_digit(prompt[2]) || prompt[3] != arith::kEquals) {
    throw std::invalid_argument("arithmetic_reward: malformed prompt");
  }
  const int expected = (prompt[0] - arith::kDigitBase) + (prompt[2] - arith::kDigitBase);
  if (response.empty() || response.size() > 6) return 0.0;
  long long value = 0;
  for (int t : response) {
    if (!is_digit(t)) return 0.0;
    value = value * 10 + (t - arith::kDigitBase);
  }
  return value == expected ? 1.0 : 0.0;
}

}  // namespace adaptlab
