#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace adaptlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelSection {
  long long vocab = 13;
  long long dim = 16;
  long long hidden = 32;
  long long layers = 2;
  double init_scale = 0.02;
};

struct OptimSection {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
  double clip_norm = 1.0;
};

struct ScheduleSection {
  std::string shape = "cosine";
  double peak_lr = 7e-6;
  double final_lr = 6e-7;
  long long warmup_steps = 50;
  long long total_steps = 300;
};

struct ALRSection {
  bool enabled = true;
  long long ref_batch_tokens = 64;
};

struct SFTSection {
  std::string dataset;
  std::string checkpoint;
  long long max_len = 64;
  long long batch_sequences = 8;
  long long steps = 300;
};

struct PrefSection {
  std::string method = "dpop";
  std::string dataset;
  std::string checkpoint;
  double beta = 0.1;
  double lambda = 2.5;
  double gamma = 0.0;
  long long batch_size = 8;
  long long steps = 100;
};

struct GRPOSection {
  std::string task;
  std::string checkpoint;
  long long group_size = 8;
  double epsilon_clip = 0.2;
  double kl_coeff = 0.001;
  double lr = 1e-6;
  double sigma_tolerance = 1e-8;
  long long response_len = 2;
  long long prompts_per_step = 8;
  long long steps = 200;
};

struct AdaptSection {
  std::string old_checkpoint;
  std::string old_tokenizer;
  std::string new_tokenizer;
  std::string corpus;   // documents for the aux-embedding trainer
  std::string dataset;  // SFT data for the two phases
  std::string method = "focus";
  double scale = 0.02;
  double ridge = 0.0;
  bool full_reinit = false;
  long long aux_dim = 8;
  long long aux_window = 2;
  long long m = 1;
  long long k = 1;
  long long phase1_steps = 1;
  long long phase2_steps = 0;
  long long max_len = 64;
  long long batch_sequences = 8;
};

// One JSON document drives every run. Parsing validates against the
// published schema: unknown keys anywhere are rejected, values are
// type-checked, and parse -> to_json -> parse is the identity.
struct ExperimentConfig {
  long long version = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  std::optional<ModelSection> model;
  std::optional<OptimSection> optim;
  std::optional<ScheduleSection> schedule;
  std::optional<ALRSection> alr;
  std::optional<SFTSection> sft;
  std::optional<PrefSection> pref;
  std::optional<GRPOSection> grpo;
  std::optional<AdaptSection> adapt;

  static ExperimentConfig parse(const nlohmann::json& doc);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;

  const ModelSection& require_model() const;
  const OptimSection& require_optim() const;
  const ScheduleSection& require_schedule() const;
  const ALRSection& require_alr() const;
  const SFTSection& require_sft() const;
  const PrefSection& require_pref() const;
  const GRPOSection& require_grpo() const;
  const AdaptSection& require_adapt() const;
};

// Complete config documents embedding the published training
// hyperparameters per stage, scaled to desk-size step counts.
// Stages: "sft", "dpo", "dpop", "orpo", "simpo", "grpo", "adapt".
nlohmann::json default_config(const std::string& stage);

}  // namespace adaptlab
