#include "adaptlab/pipeline.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptlab/embed_transfer.hpp"
#include "adaptlab/grpo.hpp"
#include "adaptlab/schedules.hpp"
#include "adaptlab/tokenizer.hpp"

namespace adaptlab {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

AdamWConfig adamw_config(const OptimSection& o) {
  AdamWConfig cfg;
  cfg.beta1 = o.beta1;
  cfg.beta2 = o.beta2;
  cfg.eps = o.eps;
  cfg.weight_decay = o.weight_decay;
  return cfg;
}

ScheduleConfig schedule_config(const ScheduleSection& s) {
  ScheduleConfig cfg;
  cfg.shape = s.shape == "constant" ? ScheduleShape::constant : ScheduleShape::cosine;
  cfg.peak_lr = s.peak_lr;
  cfg.final_lr = s.shape == "constant" ? s.peak_lr : s.final_lr;
  cfg.warmup_steps = s.warmup_steps;
  cfg.total_steps = s.total_steps;
  return cfg;
}

// One masked-SFT phase over packed batches; appends one CSV row per step.
void sft_phase(ModelParams& params, AdamWState& opt, const std::vector<MaskedSequence>& packed,
               const OptimSection& optim, const ScheduleSection& sched, const ALRSection& alr_cfg,
               long long batch_sequences, long long steps, long long step_offset,
               const FreezeMask* mask, const std::string& phase,
               std::vector<std::string>& rows) {
  if (packed.empty() && steps > 0) {
    throw std::runtime_error("sft: empty dataset");
  }
  ScheduleConfig sc = schedule_config(sched);
  std::size_t cursor = 0;
  for (long long step = 0; step < steps; ++step) {
    Batch batch;
    for (long long b = 0; b < batch_sequences; ++b) {
      batch.sequences.push_back(packed[cursor]);
      cursor = (cursor + 1) % packed.size();
    }
    ModelParams grads = zeros_like(params);
    LossResult loss = masked_nll_backward(params, batch, grads);
    double grad_norm = clip_grad_norm(grads, optim.clip_norm);
    double lr = schedule_lr(sc, step_offset + step);
    if (alr_cfg.enabled) {
      lr *= std::sqrt(static_cast<double>(loss.unmasked_tokens) /
                      static_cast<double>(alr_cfg.ref_batch_tokens));
    }
    adamw_step(params, grads, opt, lr, mask);
    std::ostringstream row;
    row << (step_offset + step) << ',' << phase << ',' << format_double(loss.loss) << ','
        << loss.unmasked_tokens << ',' << format_double(grad_norm) << ',' << format_double(lr);
    rows.push_back(row.str());
  }
}

}  // namespace

TrainOutput train_sft(const ExperimentConfig& cfg, const ModelParams& start,
                      const std::vector<MaskedSequence>& samples) {
  const SFTSection& sft = cfg.require_sft();
  const OptimSection& optim = cfg.require_optim();
  const ScheduleSection& sched = cfg.require_schedule();
  const ALRSection& alr_cfg = cfg.require_alr();
  if (sft.steps > sched.total_steps) {
    throw ConfigError("config: sft.steps exceeds schedule.total_steps");
  }
  std::vector<MaskedSequence> packed =
      pack_samples(samples, static_cast<std::size_t>(sft.max_len));

  TrainOutput out;
  out.params = start;
  out.csv_header = "step,phase,loss,tokens,grad_norm,lr";
  AdamWState opt = init_adamw(out.params, adamw_config(optim));
  sft_phase(out.params, opt, packed, optim, sched, alr_cfg, sft.batch_sequences, sft.steps, 0,
            nullptr, "sft", out.csv_rows);
  return out;
}

TrainOutput train_pref(const ExperimentConfig& cfg, const ModelParams& start,
                       const std::vector<PreferenceExample>& data) {
  const PrefSection& pref = cfg.require_pref();
  const OptimSection& optim = cfg.require_optim();
  const ScheduleSection& sched = cfg.require_schedule();
  if (pref.steps > sched.total_steps) {
    throw ConfigError("config: pref.steps exceeds schedule.total_steps");
  }
  if (data.empty() && pref.steps > 0) {
    throw std::runtime_error("pref: empty dataset");
  }
  PrefMethod method = pref_method_from_string(pref.method);
  PrefLossConfig loss_cfg;
  loss_cfg.beta = pref.beta;
  loss_cfg.lambda_penalty = pref.lambda;
  loss_cfg.gamma_margin = pref.gamma;

  TrainOutput out;
  out.params = start;
  out.csv_header = "step,loss,grad_norm,lr";
  const ModelParams reference = start;  // frozen
  ScheduleConfig sc = schedule_config(sched);
  AdamWState opt = init_adamw(out.params, adamw_config(optim));
  std::size_t cursor = 0;
  for (long long step = 0; step < pref.steps; ++step) {
    std::vector<PreferenceExample> batch;
    for (long long b = 0; b < pref.batch_size; ++b) {
      batch.push_back(data[cursor]);
      cursor = (cursor + 1) % data.size();
    }
    ModelParams grads = zeros_like(out.params);
    double loss = pref_gradients(batch, out.params,
                                 pref_method_needs_reference(method) ? &reference : nullptr,
                                 method, loss_cfg, grads);
    double grad_norm = clip_grad_norm(grads, optim.clip_norm);
    double lr = schedule_lr(sc, step);
    adamw_step(out.params, grads, opt, lr);
    std::ostringstream row;
    row << step << ',' << format_double(loss) << ',' << format_double(grad_norm) << ','
        << format_double(lr);
    out.csv_rows.push_back(row.str());
  }
  return out;
}

TrainOutput train_grpo(const ExperimentConfig& cfg, const ModelParams& start,
                       const std::vector<std::vector<int>>& prompts) {
  const GRPOSection& g = cfg.require_grpo();
  const OptimSection& optim = cfg.require_optim();
  if (prompts.empty() && g.steps > 0) {
    throw std::runtime_error("grpo: no prompts");
  }
  GRPOConfig gc;
  gc.group_size = static_cast<std::size_t>(g.group_size);
  gc.epsilon_clip = g.epsilon_clip;
  gc.kl_coeff = g.kl_coeff;
  gc.lr = g.lr;
  gc.sigma_tolerance = g.sigma_tolerance;
  gc.response_len = static_cast<std::size_t>(g.response_len);
  validate(gc);

  TrainOutput out;
  out.params = start;
  out.csv_header = "step,mean_reward,objective,kl,clip_fraction,lr";
  const ModelParams reference = start;  // frozen KL anchor
  AdamWState opt = init_adamw(out.params, adamw_config(optim));
  RngStream root(cfg.seed, 0);
  RngStream run_stream = root.split("grpo");
  std::size_t cursor = 0;
  for (long long step = 0; step < g.steps; ++step) {
    std::vector<std::vector<int>> step_prompts;
    for (long long b = 0; b < g.prompts_per_step; ++b) {
      step_prompts.push_back(prompts[cursor]);
      cursor = (cursor + 1) % prompts.size();
    }
    ModelParams old_params = out.params;  // pre-step snapshot
    RngStream step_stream = run_stream.split(static_cast<std::uint64_t>(step));
    GRPOStepMetrics metrics = grpo_step(out.params, reference, old_params, step_prompts,
                                        arithmetic_reward, gc, opt, step_stream);
    std::ostringstream row;
    row << step << ',' << format_double(metrics.mean_reward) << ','
        << format_double(metrics.objective) << ',' << format_double(metrics.kl) << ','
        << format_double(metrics.clip_fraction) << ',' << format_double(gc.lr);
    out.csv_rows.push_back(row.str());
  }
  return out;
}

namespace {

std::vector<std::string> load_text_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corpus: cannot open " + path);
  std::vector<std::string> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) docs.push_back(line);
  }
  return docs;
}

// Applies one transfer method to a token-indexed matrix (embedding rows or
// transposed output head).
EmbeddingMatrix transfer_rows(const std::string& method, const EmbeddingMatrix& old,
                              const VocabAlignment& align,
                              const std::vector<std::string>& new_vocab,
                              const AuxEmbedding* aux, double scale, double ridge,
                              bool full_reinit, RngStream rng) {
  if (method == "random") {
    return init_random_transfer(old, align, scale, rng, full_reinit);
  }
  if (method == "fvt") {
    return init_fvt(old, align, new_vocab);
  }
  if (method == "linear") {
    return init_linear(old, *aux, align, new_vocab, ridge);
  }
  if (method == "focus") {
    return init_focus(old, *aux, align, new_vocab);
  }
  throw std::invalid_argument("adapt: unknown transfer method " + method);
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

}  // namespace

AdaptOutput run_adapt(const ExperimentConfig& cfg) {
  const AdaptSection& a = cfg.require_adapt();
  const OptimSection& optim = cfg.require_optim();
  const ScheduleSection& sched = cfg.require_schedule();
  const ALRSection& alr_cfg = cfg.require_alr();
  if (a.phase1_steps + a.phase2_steps > sched.total_steps) {
    throw ConfigError("config: adapt phase steps exceed schedule.total_steps");
  }

  ModelParams old_params = load_checkpoint(a.old_checkpoint);
  TokenizerModel old_tok = TokenizerModel::load(a.old_tokenizer);
  TokenizerModel new_tok = TokenizerModel::load(a.new_tokenizer);
  if (old_params.vocab != old_tok.vocab_size()) {
    throw std::runtime_error("adapt: old checkpoint vocab (" + std::to_string(old_params.vocab) +
                             ") does not match old tokenizer vocab (" +
                             std::to_string(old_tok.vocab_size()) + ")");
  }

  VocabAlignment align = build_alignment(old_tok, new_tok);
  std::vector<std::string> new_vocab = vocab_strings(new_tok);

  RngStream root(cfg.seed, 0);
  AuxEmbedding aux;
  const bool needs_aux = a.method == "linear" || a.method == "focus";
  if (needs_aux) {
    std::vector<std::string> corpus = load_text_corpus(a.corpus);
    RngStream aux_stream = root.split("aux");
    aux = train_aux_embedding(corpus, {&old_tok, &new_tok},
                              static_cast<std::size_t>(a.aux_dim),
                              static_cast<std::size_t>(a.aux_window), aux_stream);
  }

  // Transfer embeddings; the output head gets the same treatment on its
  // token-indexed transpose.
  EmbeddingMatrix old_emb{old_params.embeddings};
  EmbeddingMatrix new_emb =
      transfer_rows(a.method, old_emb, align, new_vocab, needs_aux ? &aux : nullptr, a.scale,
                    a.ridge, a.full_reinit, root.split("embed"));
  EmbeddingMatrix old_head_rows{transpose(old_params.head)};
  EmbeddingMatrix new_head_rows =
      transfer_rows(a.method, old_head_rows, align, new_vocab, needs_aux ? &aux : nullptr,
                    a.scale, a.ridge, a.full_reinit, root.split("head"));

  ModelParams swapped;
  swapped.vocab = new_vocab.size();
  swapped.dim = old_params.dim;
  swapped.hidden = old_params.hidden;
  swapped.embeddings = new_emb.rows;
  swapped.layers = old_params.layers;
  swapped.head = transpose(new_head_rows.rows);

  AdaptOutput out;
  LayerPlan plan = dus_plan(old_params.depth(), static_cast<std::size_t>(a.m));
  plan = outermost_duplicate(plan, static_cast<std::size_t>(a.k));
  out.plan = plan;
  out.phase1_mask = adaptation_freeze_mask(plan, outer_duplicate_positions(plan));

  out.train.params = apply_plan(swapped, plan);
  out.train.csv_header = "step,phase,loss,tokens,grad_norm,lr";

  std::vector<MaskedSequence> samples = load_sft_dataset(a.dataset);
  std::vector<MaskedSequence> packed =
      pack_samples(samples, static_cast<std::size_t>(a.max_len));

  AdamWState opt = init_adamw(out.train.params, adamw_config(optim));
  sft_phase(out.train.params, opt, packed, optim, sched, alr_cfg, a.batch_sequences,
            a.phase1_steps, 0, &out.phase1_mask, "adapt1", out.train.csv_rows);
  sft_phase(out.train.params, opt, packed, optim, sched, alr_cfg, a.batch_sequences,
            a.phase2_steps, a.phase1_steps, nullptr, "adapt2", out.train.csv_rows);
  return out;
}

RunPaths write_run_report(const ExperimentConfig& cfg, const TrainOutput& result,
                          const std::string& out_dir, const std::string& checkpoint_override) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  RunPaths paths;
  paths.metrics_csv = (fs::path(out_dir) / "metrics.csv").string();
  paths.report_json = (fs::path(out_dir) / "report.json").string();
  paths.checkpoint = checkpoint_override.empty()
                         ? (fs::path(out_dir) / "checkpoint.bin").string()
                         : checkpoint_override;

  {
    std::ofstream csv(paths.metrics_csv, std::ios::binary);
    if (!csv) throw std::runtime_error("report: cannot open " + paths.metrics_csv);
    csv << result.csv_header << '\n';
    for (const std::string& row : result.csv_rows) csv << row << '\n';
  }
  save_checkpoint(result.params, paths.checkpoint);
  {
    char checksum[32];
    std::snprintf(checksum, sizeof checksum, "0x%016" PRIx64, params_checksum(result.params));
    nlohmann::json report;
    report["config"] = cfg.to_json();
    report["final_checksum"] = checksum;
    report["steps"] = result.csv_rows.size();
    report["versions"] = {{"adaptlab", "0.1.0"},
                          {"config_format", 1},
                          {"checkpoint_format", 1},
                          {"tokenizer_format", 1}};
    std::ofstream out(paths.report_json, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot open " + paths.report_json);
    out << report.dump(2) << '\n';
  }
  return paths;
}

}  // namespace adaptlab
