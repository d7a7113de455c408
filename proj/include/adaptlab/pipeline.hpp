#pragma once

#include <string>
#include <vector>

#include "adaptlab/config.hpp"
#include "adaptlab/data.hpp"
#include "adaptlab/model.hpp"
#include "adaptlab/pref_losses.hpp"
#include "adaptlab/upscale.hpp"

namespace adaptlab {

struct TrainOutput {
  ModelParams params;
  std::string csv_header;
  std::vector<std::string> csv_rows;
};

// Masked SFT over a packed dataset with the configured schedule, ALR
// scaling, and gradient clipping. Requires model/optim/schedule/alr/sft
// sections.
TrainOutput train_sft(const ExperimentConfig& cfg, const ModelParams& start,
                      const std::vector<MaskedSequence>& samples);

// Preference training; the start params double as the frozen reference for
// the methods that need one. Requires model/optim/schedule/alr/pref.
TrainOutput train_pref(const ExperimentConfig& cfg, const ModelParams& start,
                       const std::vector<PreferenceExample>& data);

// GRPO on verifiable-reward prompts; the start params are the frozen KL
// reference and each step's old policy is the pre-step parameter snapshot.
// Requires model/optim/grpo.
TrainOutput train_grpo(const ExperimentConfig& cfg, const ModelParams& start,
                       const std::vector<std::vector<int>>& prompts);

struct AdaptOutput {
  TrainOutput train;
  LayerPlan plan;
  FreezeMask phase1_mask;
};

// Tokenizer-replacement pipeline: embedding transfer (embeddings and output
// head), depth up-scaling with outermost duplication, a frozen phase-1 SFT
// pass over the duplicated layers + embeddings, then an unfrozen phase 2.
AdaptOutput run_adapt(const ExperimentConfig& cfg);

struct RunPaths {
  std::string metrics_csv;
  std::string report_json;
  std::string checkpoint;
};

// Writes metrics.csv, report.json (config echo, final parameter checksum,
// format versions) and the final checkpoint under out_dir. Two runs with
// identical config and seed produce byte-identical files.
RunPaths write_run_report(const ExperimentConfig& cfg, const TrainOutput& result,
                          const std::string& out_dir, const std::string& checkpoint_override);

// Exact decimal formatting used in every CSV/report so reruns are
// byte-identical.
std::string format_double(double v);

}  // namespace adaptlab
