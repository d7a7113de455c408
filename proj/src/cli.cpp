#include "adaptlab/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adaptlab/config.hpp"
#include "adaptlab/data.hpp"
#include "adaptlab/merge.hpp"
#include "adaptlab/pipeline.hpp"
#include "adaptlab/pref_losses.hpp"
#include "adaptlab/schedules.hpp"
#include "adaptlab/tokenizer.hpp"
#include "adaptlab/verify.hpp"

namespace adaptlab {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string resolve_out_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("ADAPTLAB_OUT")) {
    if (*env) return env;
  }
  return cfg.out_dir;
}

std::string checksum_hex(const ModelParams& params) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, params_checksum(params));
  return buf;
}

ModelParams starting_params(const ExperimentConfig& cfg, const std::string& checkpoint) {
  if (!checkpoint.empty()) {
    return load_checkpoint(checkpoint);
  }
  const ModelSection& m = cfg.require_model();
  RngStream rng(cfg.seed, 0);
  RngStream init_stream = rng.split("init");
  return init_model(static_cast<std::size_t>(m.vocab), static_cast<std::size_t>(m.dim),
                    static_cast<std::size_t>(m.hidden), static_cast<std::size_t>(m.layers),
                    m.init_scale, init_stream);
}

void print_report(const RunPaths& paths, const ModelParams& params) {
  std::cout << "metrics:    " << paths.metrics_csv << '\n'
            << "report:     " << paths.report_json << '\n'
            << "checkpoint: " << paths.checkpoint << '\n'
            << "checksum:   " << checksum_hex(params) << '\n';
}

void print_efficiency_row(const std::string& label, const EfficiencyReport& r) {
  std::cout << label << ',' << r.token_count << ',' << r.char_count << ',' << r.word_count << ','
            << format_double(r.cpt()) << ',' << format_double(r.tpw()) << '\n';
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"desk-scale LM adaptation and post-training lab"};
  app.require_subcommand(1);

  // ---- tokenizer ----
  auto* tok_cmd = app.add_subcommand("tokenizer", "train/apply BPE tokenizers and report metrics");
  tok_cmd->require_subcommand(1);
  struct {
    std::vector<std::string> corpus;
    std::size_t vocab = 300;
    bool isolate_digits = false;
    bool isolate_punct = false;
    std::string out;
    std::string model;
    std::vector<std::string> models;
    std::string text;
    std::string file;
  } tok;

  auto* tok_train = tok_cmd->add_subcommand("train", "train a byte-level BPE tokenizer");
  tok_train->add_option("--corpus", tok.corpus, "corpus text files")->required();
  tok_train->add_option("--vocab", tok.vocab, "target vocabulary size")->required();
  tok_train->add_flag("--isolate-digits", tok.isolate_digits, "digits become single pretokens");
  tok_train->add_flag("--isolate-punct", tok.isolate_punct, "punctuation becomes single pretokens");
  tok_train->add_option("--out", tok.out, "output tokenizer file")->required();
  tok_train->callback([&] {
    std::vector<std::string> docs;
    for (const std::string& path : tok.corpus) docs.push_back(read_file(path));
    TokenizerModel model =
        train_bpe(docs, tok.vocab, {tok.isolate_digits, tok.isolate_punct});
    model.save(tok.out);
    std::cout << "trained vocab " << model.vocab_size() << " (" << model.merges().size()
              << " merges) -> " << tok.out << '\n';
  });

  auto text_or_file = [&]() -> std::string {
    if (!tok.file.empty()) return read_file(tok.file);
    return tok.text;
  };

  auto* tok_encode = tok_cmd->add_subcommand("encode", "encode text to token ids");
  tok_encode->add_option("--model", tok.model)->required();
  tok_encode->add_option("--text", tok.text);
  tok_encode->add_option("--file", tok.file);
  tok_encode->callback([&] {
    TokenizerModel model = TokenizerModel::load(tok.model);
    std::vector<int> ids = model.encode(text_or_file());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) std::cout << ' ';
      std::cout << ids[i];
    }
    std::cout << '\n';
  });

  auto* tok_stats = tok_cmd->add_subcommand("stats", "efficiency metrics for one tokenizer");
  tok_stats->add_option("--model", tok.model)->required();
  tok_stats->add_option("--text", tok.text);
  tok_stats->add_option("--file", tok.file);
  tok_stats->callback([&] {
    TokenizerModel model = TokenizerModel::load(tok.model);
    std::cout << "model,tokens,chars,words,cpt,tpw\n";
    print_efficiency_row(tok.model, efficiency_metrics(model, text_or_file()));
  });

  auto* tok_compare = tok_cmd->add_subcommand("compare", "efficiency table for several tokenizers");
  tok_compare->add_option("--model", tok.models, "tokenizer files (repeatable)")->required();
  tok_compare->add_option("--text", tok.text);
  tok_compare->add_option("--file", tok.file);
  tok_compare->callback([&] {
    std::vector<TokenizerModel> models;
    for (const std::string& path : tok.models) models.push_back(TokenizerModel::load(path));
    std::vector<EfficiencyReport> rows = compare_tokenizers(models, text_or_file());
    std::cout << "model,tokens,chars,words,cpt,tpw\n";
    for (std::size_t i = 0; i < rows.size(); ++i) print_efficiency_row(tok.models[i], rows[i]);
  });

  // ---- plan ----
  auto* plan_cmd = app.add_subcommand("plan", "print a depth up-scaling layer plan");
  struct {
    std::size_t n = 0, m = 0, k = 0;
  } plan_args;
  plan_cmd->add_option("--n", plan_args.n, "source depth")->required();
  plan_cmd->add_option("--m", plan_args.m, "overlap-removal count")->required();
  plan_cmd->add_option("--k", plan_args.k, "outermost duplication per end");
  plan_cmd->callback([&] {
    LayerPlan plan = dus_plan(plan_args.n, plan_args.m);
    if (plan_args.k > 0) plan = outermost_duplicate(plan, plan_args.k);
    std::cout << plan.to_text() << '\n';
  });

  // ---- init ----
  auto* init_cmd = app.add_subcommand("init", "create a freshly initialized checkpoint");
  struct {
    std::string config, out;
  } init_args;
  init_cmd->add_option("--config", init_args.config)->required();
  init_cmd->add_option("--out", init_args.out)->required();
  init_cmd->callback([&] {
    ExperimentConfig cfg = ExperimentConfig::load(init_args.config);
    ModelParams params = starting_params(cfg, "");
    save_checkpoint(params, init_args.out);
    std::cout << "checkpoint: " << init_args.out << '\n'
              << "checksum:   " << checksum_hex(params) << '\n';
  });

  // ---- adapt ----
  auto* adapt_cmd =
      app.add_subcommand("adapt", "tokenizer swap + depth up-scaling + freeze/unfreeze training");
  struct {
    std::string config, out;
  } adapt_args;
  adapt_cmd->add_option("--config", adapt_args.config)->required();
  adapt_cmd->add_option("--out", adapt_args.out, "checkpoint path override");
  adapt_cmd->callback([&] {
    ExperimentConfig cfg = ExperimentConfig::load(adapt_args.config);
    AdaptOutput out = run_adapt(cfg);
    RunPaths paths = write_run_report(cfg, out.train, resolve_out_dir(cfg), adapt_args.out);
    std::cout << "plan: " << out.plan.to_text() << '\n';
    print_report(paths, out.train.params);
  });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "run one training stage");
  train_cmd->require_subcommand(1);
  struct {
    std::string config, out;
  } train_args;
  auto add_stage = [&](const std::string& name, const std::string& help) {
    auto* sub = train_cmd->add_subcommand(name, help);
    sub->add_option("--config", train_args.config)->required();
    sub->add_option("--out", train_args.out, "checkpoint path override");
    return sub;
  };

  add_stage("sft", "masked-token supervised fine-tuning")->callback([&] {
    ExperimentConfig cfg = ExperimentConfig::load(train_args.config);
    const SFTSection& sft = cfg.require_sft();
    std::vector<MaskedSequence> samples = load_sft_dataset(sft.dataset);
    TrainOutput out = train_sft(cfg, starting_params(cfg, sft.checkpoint), samples);
    print_report(write_run_report(cfg, out, resolve_out_dir(cfg), train_args.out), out.params);
  });

  for (const std::string method : {"dpo", "dpop", "orpo", "simpo"}) {
    add_stage(method, "preference optimization (" + method + ")")->callback([&, method] {
      ExperimentConfig cfg = ExperimentConfig::load(train_args.config);
      const PrefSection& pref = cfg.require_pref();
      if (pref.method != method) {
        throw ConfigError("config: pref.method is \"" + pref.method +
                          "\" but the selected stage is \"" + method + "\"");
      }
      std::vector<PreferenceExample> data = load_preference_dataset(pref.dataset);
      TrainOutput out = train_pref(cfg, starting_params(cfg, pref.checkpoint), data);
      print_report(write_run_report(cfg, out, resolve_out_dir(cfg), train_args.out), out.params);
    });
  }

  add_stage("grpo", "group-relative policy optimization on a verifiable task")->callback([&] {
    ExperimentConfig cfg = ExperimentConfig::load(train_args.config);
    const GRPOSection& g = cfg.require_grpo();
    std::vector<TaskRecord> records = load_task_file(g.task);
    std::vector<std::vector<int>> prompts;
    for (const TaskRecord& r : records) prompts.push_back(r.prompt);
    TrainOutput out = train_grpo(cfg, starting_params(cfg, g.checkpoint), prompts);
    print_report(write_run_report(cfg, out, resolve_out_dir(cfg), train_args.out), out.params);
  });

  // ---- merge ----
  auto* merge_cmd = app.add_subcommand("merge", "linear checkpoint merge");
  struct {
    std::string spec, out;
  } merge_args;
  merge_cmd->add_option("--spec", merge_args.spec, "JSON file with inputs and weights")->required();
  merge_cmd->add_option("--out", merge_args.out)->required();
  merge_cmd->callback([&] {
    MergeSpec spec = load_merge_spec(merge_args.spec);
    std::vector<ModelParams> models;
    for (const std::string& path : spec.inputs) models.push_back(load_checkpoint(path));
    ModelParams merged = linear_merge(models, spec.weights);
    save_checkpoint(merged, merge_args.out);
    std::cout << "checkpoint: " << merge_args.out << '\n'
              << "checksum:   " << checksum_hex(merged) << '\n';
  });

  // ---- schedule ----
  auto* sched_cmd = app.add_subcommand("schedule", "dump the step -> lr table as CSV");
  struct {
    std::string config, out;
  } sched_args;
  sched_cmd->add_option("--config", sched_args.config)->required();
  sched_cmd->add_option("--out", sched_args.out, "CSV path (stdout when omitted)");
  sched_cmd->callback([&] {
    ExperimentConfig cfg = ExperimentConfig::load(sched_args.config);
    const ScheduleSection& s = cfg.require_schedule();
    ScheduleConfig sc;
    sc.shape = s.shape == "constant" ? ScheduleShape::constant : ScheduleShape::cosine;
    sc.peak_lr = s.peak_lr;
    sc.final_lr = s.shape == "constant" ? s.peak_lr : s.final_lr;
    sc.warmup_steps = s.warmup_steps;
    sc.total_steps = s.total_steps;
    std::ostringstream csv;
    csv << "step,lr\n";
    for (long long step = 0; step <= s.total_steps; ++step) {
      csv << step << ',' << format_double(schedule_lr(sc, step)) << '\n';
    }
    if (sched_args.out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream out(sched_args.out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + sched_args.out);
      out << csv.str();
      std::cout << "schedule table: " << sched_args.out << '\n';
    }
  });

  // ---- default-config ----
  auto* defcfg_cmd = app.add_subcommand("default-config", "print a complete starter config");
  std::string stage;
  defcfg_cmd->add_option("stage", stage, "sft|dpo|dpop|orpo|simpo|grpo|adapt")->required();
  defcfg_cmd->callback([&] { std::cout << default_config(stage).dump(2) << '\n'; });

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  VerifyOptions verify_opts;
  verify_cmd
      ->add_flag("--inject-gradient-fault", verify_opts.inject_gradient_fault,
                 "negative-control hook: corrupt one gradient so the suite must fail")
      ->group("");  // hidden
  int verify_failures = -1;
  verify_cmd->callback([&] {
    std::vector<CheckResult> results = run_verification(verify_opts);
    verify_failures = print_verification(std::cout, results);
  });

  std::vector<const char*> argv;
  argv.push_back("adaptlab");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (verify_failures > 0) return 2;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace adaptlab
