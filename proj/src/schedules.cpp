#include "adaptlab/schedules.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adaptlab {

double alr(const ALRConfig& cfg, long long batch_tokens) {
  if (cfg.base_lr <= 0.0) {
    throw std::invalid_argument("alr: base_lr must be positive");
  }
  if (cfg.ref_batch_tokens <= 0) {
    throw std::invalid_argument("alr: ref_batch_tokens must be positive");
  }
  if (batch_tokens < 0) {
    throw std::invalid_argument("alr: negative batch_tokens");
  }
  return cfg.base_lr * std::sqrt(static_cast<double>(batch_tokens) /
                                 static_cast<double>(cfg.ref_batch_tokens));
}

double schedule_lr(const ScheduleConfig& cfg, long long step) {
  if (cfg.warmup_steps < 0 || cfg.total_steps < cfg.warmup_steps) {
    throw std::invalid_argument("schedule_lr: require 0 <= warmup_steps <= total_steps");
  }
  if (cfg.final_lr > cfg.peak_lr) {
    throw std::invalid_argument("schedule_lr: final_lr must not exceed peak_lr");
  }
  if (step < 0 || step > cfg.total_steps) {
    throw std::invalid_argument("schedule_lr: step out of range");
  }
  if (step < cfg.warmup_steps) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.shape == ScheduleShape::constant) {
    return cfg.peak_lr;
  }
  const long long span = cfg.total_steps - cfg.warmup_steps;
  if (span == 0) return cfg.peak_lr;
  const double progress = static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(span);
  return cfg.final_lr +
         (cfg.peak_lr - cfg.final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double effective_lr(const ScheduleConfig& sched, const ALRConfig& alr_cfg, long long step,
                    long long batch_tokens) {
  if (alr_cfg.ref_batch_tokens <= 0) {
    throw std::invalid_argument("effective_lr: ref_batch_tokens must be positive");
  }
  if (batch_tokens < 0) {
    throw std::invalid_argument("effective_lr: negative batch_tokens");
  }
  return schedule_lr(sched, step) * std::sqrt(static_cast<double>(batch_tokens) /
                                              static_cast<double>(alr_cfg.ref_batch_tokens));
}

}  // namespace adaptlab
