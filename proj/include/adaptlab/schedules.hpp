#pragma once

#include <cstdint>

namespace adaptlab {

// Base learning rate scaled by sqrt(batch_tokens / ref_batch_tokens),
// where batch_tokens counts the loss-contributing tokens of the batch.
struct ALRConfig {
  double base_lr = 0.0;
  long long ref_batch_tokens = 0;
};

double alr(const ALRConfig& cfg, long long batch_tokens);

enum class ScheduleShape { cosine, constant };

struct ScheduleConfig {
  double peak_lr = 0.0;
  double final_lr = 0.0;
  long long warmup_steps = 0;
  long long total_steps = 0;
  ScheduleShape shape = ScheduleShape::cosine;
};

// Linear ramp 0 -> peak over warmup_steps, then cosine decay peak -> final
// (or constant peak). Throws when step is outside [0, total_steps].
double schedule_lr(const ScheduleConfig& cfg, long long step);

// schedule_lr(step) * sqrt(batch_tokens / ref_batch_tokens).
double effective_lr(const ScheduleConfig& sched, const ALRConfig& alr_cfg, long long step,
                    long long batch_tokens);

}  // namespace adaptlab
