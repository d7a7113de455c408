#include "adaptlab/config.hpp"

#include <fstream>

namespace adaptlab {

namespace {

using nlohmann::json;

enum class Kind { integer, number, boolean, string };

struct Field {
  const char* name;
  Kind kind;
};

constexpr Field kModelFields[] = {{"vocab", Kind::integer},
                                  {"dim", Kind::integer},
                                  {"hidden", Kind::integer},
                                  {"layers", Kind::integer},
                                  {"init_scale", Kind::number}};
constexpr Field kOptimFields[] = {{"beta1", Kind::number},
                                  {"beta2", Kind::number},
                                  {"eps", Kind::number},
                                  {"weight_decay", Kind::number},
                                  {"clip_norm", Kind::number}};
constexpr Field kScheduleFields[] = {{"shape", Kind::string},
                                     {"peak_lr", Kind::number},
                                     {"final_lr", Kind::number},
                                     {"warmup_steps", Kind::integer},
                                     {"total_steps", Kind::integer}};
constexpr Field kAlrFields[] = {{"enabled", Kind::boolean}, {"ref_batch_tokens", Kind::integer}};
constexpr Field kSftFields[] = {{"dataset", Kind::string},
                                {"checkpoint", Kind::string},
                                {"max_len", Kind::integer},
                                {"batch_sequences", Kind::integer},
                                {"steps", Kind::integer}};
constexpr Field kPrefFields[] = {{"method", Kind::string},  {"dataset", Kind::string},
                                 {"checkpoint", Kind::string}, {"beta", Kind::number},
                                 {"lambda", Kind::number},  {"gamma", Kind::number},
                                 {"batch_size", Kind::integer}, {"steps", Kind::integer}};
constexpr Field kGrpoFields[] = {
    {"task", Kind::string},          {"checkpoint", Kind::string},
    {"group_size", Kind::integer},   {"epsilon_clip", Kind::number},
    {"kl_coeff", Kind::number},      {"lr", Kind::number},
    {"sigma_tolerance", Kind::number}, {"response_len", Kind::integer},
    {"prompts_per_step", Kind::integer}, {"steps", Kind::integer}};
constexpr Field kAdaptFields[] = {
    {"old_checkpoint", Kind::string}, {"old_tokenizer", Kind::string},
    {"new_tokenizer", Kind::string},  {"corpus", Kind::string},
    {"dataset", Kind::string},        {"method", Kind::string},
    {"scale", Kind::number},          {"ridge", Kind::number},
    {"full_reinit", Kind::boolean},   {"aux_dim", Kind::integer},
    {"aux_window", Kind::integer},    {"m", Kind::integer},
    {"k", Kind::integer},             {"phase1_steps", Kind::integer},
    {"phase2_steps", Kind::integer},  {"max_len", Kind::integer},
    {"batch_sequences", Kind::integer}};

bool kind_matches(const json& v, Kind kind) {
  switch (kind) {
    case Kind::integer: return v.is_number_integer() || v.is_number_unsigned();
    case Kind::number: return v.is_number();
    case Kind::boolean: return v.is_boolean();
    case Kind::string: return v.is_string();
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::integer: return "integer";
    case Kind::number: return "number";
    case Kind::boolean: return "boolean";
    case Kind::string: return "string";
  }
  return "?";
}

template <std::size_t N>
void validate_section(const json& sec, const std::string& path, const Field (&fields)[N]) {
  if (!sec.is_object()) {
    throw ConfigError("config: " + path + " must be an object");
  }
  for (const auto& [key, value] : sec.items()) {
    const Field* match = nullptr;
    for (const Field& f : fields) {
      if (key == f.name) {
        match = &f;
        break;
      }
    }
    if (!match) {
      throw ConfigError("config: unknown key " + path + "." + key);
    }
    if (!kind_matches(value, match->kind)) {
      throw ConfigError("config: " + path + "." + key + " must be a " + kind_name(match->kind));
    }
  }
  for (const Field& f : fields) {
    if (!sec.contains(f.name)) {
      throw ConfigError("config: missing key " + path + "." + f.name);
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("config: top level must be an object");
  }
  static const char* kTopKeys[] = {"version", "seed",  "out_dir", "model", "optim",
                                   "schedule", "alr",  "sft",     "pref",  "grpo",
                                   "adapt"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    bool known = false;
    for (const char* k : kTopKeys) {
      if (key == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("config: unknown key " + key);
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw ConfigError("config: missing integer key version");
  }
  if (doc["version"].get<long long>() != 1) {
    throw ConfigError("config: unsupported version " + doc["version"].dump());
  }
  if (!doc.contains("seed") || !(doc["seed"].is_number_integer() || doc["seed"].is_number_unsigned())) {
    throw ConfigError("config: missing integer key seed");
  }
  if (!doc.contains("out_dir") || !doc["out_dir"].is_string()) {
    throw ConfigError("config: missing string key out_dir");
  }

  ExperimentConfig cfg;
  cfg.version = 1;
  cfg.seed = doc["seed"].get<std::uint64_t>();
  cfg.out_dir = doc["out_dir"].get<std::string>();

  if (doc.contains("model")) {
    validate_section(doc["model"], "model", kModelFields);
    ModelSection s;
    s.vocab = doc["model"]["vocab"].get<long long>();
    s.dim = doc["model"]["dim"].get<long long>();
    s.hidden = doc["model"]["hidden"].get<long long>();
    s.layers = doc["model"]["layers"].get<long long>();
    s.init_scale = doc["model"]["init_scale"].get<double>();
    if (s.vocab <= 0 || s.dim <= 0 || s.hidden <= 0 || s.layers < 0) {
      throw ConfigError("config: model dimensions must be positive");
    }
    cfg.model = s;
  }
  if (doc.contains("optim")) {
    validate_section(doc["optim"], "optim", kOptimFields);
    OptimSection s;
    s.beta1 = doc["optim"]["beta1"].get<double>();
    s.beta2 = doc["optim"]["beta2"].get<double>();
    s.eps = doc["optim"]["eps"].get<double>();
    s.weight_decay = doc["optim"]["weight_decay"].get<double>();
    s.clip_norm = doc["optim"]["clip_norm"].get<double>();
    if (s.clip_norm <= 0.0) throw ConfigError("config: optim.clip_norm must be positive");
    cfg.optim = s;
  }
  if (doc.contains("schedule")) {
    validate_section(doc["schedule"], "schedule", kScheduleFields);
    ScheduleSection s;
    s.shape = doc["schedule"]["shape"].get<std::string>();
    s.peak_lr = doc["schedule"]["peak_lr"].get<double>();
    s.final_lr = doc["schedule"]["final_lr"].get<double>();
    s.warmup_steps = doc["schedule"]["warmup_steps"].get<long long>();
    s.total_steps = doc["schedule"]["total_steps"].get<long long>();
    if (s.shape != "cosine" && s.shape != "constant") {
      throw ConfigError("config: schedule.shape must be \"cosine\" or \"constant\"");
    }
    cfg.schedule = s;
  }
  if (doc.contains("alr")) {
    validate_section(doc["alr"], "alr", kAlrFields);
    ALRSection s;
    s.enabled = doc["alr"]["enabled"].get<bool>();
    s.ref_batch_tokens = doc["alr"]["ref_batch_tokens"].get<long long>();
    if (s.ref_batch_tokens <= 0) throw ConfigError("config: alr.ref_batch_tokens must be positive");
    cfg.alr = s;
  }
  if (doc.contains("sft")) {
    validate_section(doc["sft"], "sft", kSftFields);
    SFTSection s;
    s.dataset = doc["sft"]["dataset"].get<std::string>();
    s.checkpoint = doc["sft"]["checkpoint"].get<std::string>();
    s.max_len = doc["sft"]["max_len"].get<long long>();
    s.batch_sequences = doc["sft"]["batch_sequences"].get<long long>();
    s.steps = doc["sft"]["steps"].get<long long>();
    if (s.max_len <= 0 || s.batch_sequences <= 0 || s.steps < 0) {
      throw ConfigError("config: sft sizes must be positive");
    }
    cfg.sft = s;
  }
  if (doc.contains("pref")) {
    validate_section(doc["pref"], "pref", kPrefFields);
    PrefSection s;
    s.method = doc["pref"]["method"].get<std::string>();
    s.dataset = doc["pref"]["dataset"].get<std::string>();
    s.checkpoint = doc["pref"]["checkpoint"].get<std::string>();
    s.beta = doc["pref"]["beta"].get<double>();
    s.lambda = doc["pref"]["lambda"].get<double>();
    s.gamma = doc["pref"]["gamma"].get<double>();
    s.batch_size = doc["pref"]["batch_size"].get<long long>();
    s.steps = doc["pref"]["steps"].get<long long>();
    if (s.method != "dpo" && s.method != "dpop" && s.method != "orpo" && s.method != "simpo") {
      throw ConfigError("config: pref.method must be one of dpo|dpop|orpo|simpo");
    }
    if (s.batch_size <= 0 || s.steps < 0) {
      throw ConfigError("config: pref sizes must be positive");
    }
    cfg.pref = s;
  }
  if (doc.contains("grpo")) {
    validate_section(doc["grpo"], "grpo", kGrpoFields);
    GRPOSection s;
    s.task = doc["grpo"]["task"].get<std::string>();
    s.checkpoint = doc["grpo"]["checkpoint"].get<std::string>();
    s.group_size = doc["grpo"]["group_size"].get<long long>();
    s.epsilon_clip = doc["grpo"]["epsilon_clip"].get<double>();
    s.kl_coeff = doc["grpo"]["kl_coeff"].get<double>();
    s.lr = doc["grpo"]["lr"].get<double>();
    s.sigma_tolerance = doc["grpo"]["sigma_tolerance"].get<double>();
    s.response_len = doc["grpo"]["response_len"].get<long long>();
    s.prompts_per_step = doc["grpo"]["prompts_per_step"].get<long long>();
    s.steps = doc["grpo"]["steps"].get<long long>();
    if (s.group_size < 2 || s.response_len <= 0 || s.prompts_per_step <= 0 || s.steps < 0) {
      throw ConfigError("config: grpo sizes out of range");
    }
    cfg.grpo = s;
  }
  if (doc.contains("adapt")) {
    validate_section(doc["adapt"], "adapt", kAdaptFields);
    AdaptSection s;
    s.old_checkpoint = doc["adapt"]["old_checkpoint"].get<std::string>();
    s.old_tokenizer = doc["adapt"]["old_tokenizer"].get<std::string>();
    s.new_tokenizer = doc["adapt"]["new_tokenizer"].get<std::string>();
    s.corpus = doc["adapt"]["corpus"].get<std::string>();
    s.dataset = doc["adapt"]["dataset"].get<std::string>();
    s.method = doc["adapt"]["method"].get<std::string>();
    s.scale = doc["adapt"]["scale"].get<double>();
    s.ridge = doc["adapt"]["ridge"].get<double>();
    s.full_reinit = doc["adapt"]["full_reinit"].get<bool>();
    s.aux_dim = doc["adapt"]["aux_dim"].get<long long>();
    s.aux_window = doc["adapt"]["aux_window"].get<long long>();
    s.m = doc["adapt"]["m"].get<long long>();
    s.k = doc["adapt"]["k"].get<long long>();
    s.phase1_steps = doc["adapt"]["phase1_steps"].get<long long>();
    s.phase2_steps = doc["adapt"]["phase2_steps"].get<long long>();
    s.max_len = doc["adapt"]["max_len"].get<long long>();
    s.batch_sequences = doc["adapt"]["batch_sequences"].get<long long>();
    if (s.method != "random" && s.method != "fvt" && s.method != "linear" && s.method != "focus") {
      throw ConfigError("config: adapt.method must be one of random|fvt|linear|focus");
    }
    if (s.aux_dim <= 0 || s.aux_window <= 0 || s.m < 0 || s.k < 0 || s.phase1_steps < 0 ||
        s.phase2_steps < 0 || s.max_len <= 0 || s.batch_sequences <= 0) {
      throw ConfigError("config: adapt sizes out of range");
    }
    cfg.adapt = s;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: JSON parse error in " + path + ": " + e.what());
  }
  return parse(doc);
}

json ExperimentConfig::to_json() const {
  json doc;
  doc["version"] = version;
  doc["seed"] = seed;
  doc["out_dir"] = out_dir;
  if (model) {
    doc["model"] = {{"vocab", model->vocab},
                    {"dim", model->dim},
                    {"hidden", model->hidden},
                    {"layers", model->layers},
                    {"init_scale", model->init_scale}};
  }
  if (optim) {
    doc["optim"] = {{"beta1", optim->beta1},
                    {"beta2", optim->beta2},
                    {"eps", optim->eps},
                    {"weight_decay", optim->weight_decay},
                    {"clip_norm", optim->clip_norm}};
  }
  if (schedule) {
    doc["schedule"] = {{"shape", schedule->shape},
                       {"peak_lr", schedule->peak_lr},
                       {"final_lr", schedule->final_lr},
                       {"warmup_steps", schedule->warmup_steps},
                       {"total_steps", schedule->total_steps}};
  }
  if (alr) {
    doc["alr"] = {{"enabled", alr->enabled}, {"ref_batch_tokens", alr->ref_batch_tokens}};
  }
  if (sft) {
    doc["sft"] = {{"dataset", sft->dataset},
                  {"checkpoint", sft->checkpoint},
                  {"max_len", sft->max_len},
                  {"batch_sequences", sft->batch_sequences},
                  {"steps", sft->steps}};
  }
  if (pref) {
    doc["pref"] = {{"method", pref->method}, {"dataset", pref->dataset},
                   {"checkpoint", pref->checkpoint}, {"beta", pref->beta},
                   {"lambda", pref->lambda},  {"gamma", pref->gamma},
                   {"batch_size", pref->batch_size}, {"steps", pref->steps}};
  }
  if (grpo) {
    doc["grpo"] = {{"task", grpo->task},
                   {"checkpoint", grpo->checkpoint},
                   {"group_size", grpo->group_size},
                   {"epsilon_clip", grpo->epsilon_clip},
                   {"kl_coeff", grpo->kl_coeff},
                   {"lr", grpo->lr},
                   {"sigma_tolerance", grpo->sigma_tolerance},
                   {"response_len", grpo->response_len},
                   {"prompts_per_step", grpo->prompts_per_step},
                   {"steps", grpo->steps}};
  }
  if (adapt) {
    doc["adapt"] = {{"old_checkpoint", adapt->old_checkpoint},
                    {"old_tokenizer", adapt->old_tokenizer},
                    {"new_tokenizer", adapt->new_tokenizer},
                    {"corpus", adapt->corpus},
                    {"dataset", adapt->dataset},
                    {"method", adapt->method},
                    {"scale", adapt->scale},
                    {"ridge", adapt->ridge},
                    {"full_reinit", adapt->full_reinit},
                    {"aux_dim", adapt->aux_dim},
                    {"aux_window", adapt->aux_window},
                    {"m", adapt->m},
                    {"k", adapt->k},
                    {"phase1_steps", adapt->phase1_steps},
                    {"phase2_steps", adapt->phase2_steps},
                    {"max_len", adapt->max_len},
                    {"batch_sequences", adapt->batch_sequences}};
  }
  return doc;
}

namespace {

ConfigError missing_section(const char* name) {
  return ConfigError(std::string("config: missing required section ") + name);
}

}  // namespace

const ModelSection& ExperimentConfig::require_model() const {
  if (!model) throw missing_section("model");
  return *model;
}
const OptimSection& ExperimentConfig::require_optim() const {
  if (!optim) throw missing_section("optim");
  return *optim;
}
const ScheduleSection& ExperimentConfig::require_schedule() const {
  if (!schedule) throw missing_section("schedule");
  return *schedule;
}
const ALRSection& ExperimentConfig::require_alr() const {
  if (!alr) throw missing_section("alr");
  return *alr;
}
const SFTSection& ExperimentConfig::require_sft() const {
  if (!sft) throw missing_section("sft");
  return *sft;
}
const PrefSection& ExperimentConfig::require_pref() const {
  if (!pref) throw missing_section("pref");
  return *pref;
}
const GRPOSection& ExperimentConfig::require_grpo() const {
  if (!grpo) throw missing_section("grpo");
  return *grpo;
}
const AdaptSection& ExperimentConfig::require_adapt() const {
  if (!adapt) throw missing_section("adapt");
  return *adapt;
}

json default_config(const std::string& stage) {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.out_dir = "out";
  cfg.model = ModelSection{};
  cfg.optim = OptimSection{};
  cfg.schedule = ScheduleSection{};
  cfg.alr = ALRSection{};
  if (stage == "sft") {
    cfg.sft = SFTSection{};
  } else if (stage == "dpo" || stage == "dpop" || stage == "orpo" || stage == "simpo") {
    // Published preference-stage settings: constant 5e-7 after 50 warmup
    // steps, no weight decay, beta 0.1, lambda 2.5 for the penalized
    // variant; step count scaled to desk size.
    PrefSection p;
    p.method = stage;
    cfg.pref = p;
    cfg.schedule = ScheduleSection{"constant", 5e-7, 5e-7, 50, 1800};
    cfg.optim->weight_decay = 0.0;
    cfg.alr->enabled = false;
  } else if (stage == "grpo") {
    cfg.grpo = GRPOSection{};
    cfg.alr->enabled = false;
  } else if (stage == "adapt") {
    cfg.adapt = AdaptSection{};
  } else {
    throw ConfigError("default_config: unknown stage " + stage);
  }
  return cfg.to_json();
}

}  // namespace adaptlab
