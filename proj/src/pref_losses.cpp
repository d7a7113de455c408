#include "adaptlab/pref_losses.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adaptlab/numeric.hpp"

namespace adaptlab {

namespace {

void check_config(const PrefLossConfig& cfg) {
  if (cfg.beta <= 0.0) throw std::invalid_argument("pref loss: beta must be positive");
  if (cfg.lambda_penalty < 0.0) throw std::invalid_argument("pref loss: lambda must be >= 0");
  if (cfg.gamma_margin < 0.0) throw std::invalid_argument("pref loss: gamma must be >= 0");
}

void check_example(const PreferenceExample& ex) {
  if (ex.prompt.empty()) throw std::invalid_argument("preference example: empty prompt");
  if (ex.chosen.empty() || ex.rejected.empty()) {
    throw std::invalid_argument("preference example: empty response");
  }
  if (ex.chosen == ex.rejected) {
    throw std::invalid_argument("preference example: chosen and rejected are identical");
  }
}

}  // namespace

double dpo_loss(double lp_w, double lp_l, double ref_w, double ref_l,
                const PrefLossConfig& cfg) {
  check_config(cfg);
  double z = cfg.beta * ((lp_w - ref_w) - (lp_l - ref_l));
  return -log_sigmoid(z);
}

double dpop_loss(double lp_w, double lp_l, double ref_w, double ref_l,
                 const PrefLossConfig& cfg) {
  check_config(cfg);
  double z = cfg.beta * ((lp_w - ref_w) - (lp_l - ref_l)) -
             cfg.lambda_penalty * std::max(0.0, ref_w - lp_w);
  return -log_sigmoid(z);
}

double orpo_loss(double nll, double lp_w, double lp_l, const PrefLossConfig& cfg) {
  check_config(cfg);
  return nll + cfg.lambda_penalty * (lp_w - lp_l);
}

double simpo_loss(double lp_w, double lp_l, long long len_w, long long len_l,
                  const PrefLossConfig& cfg) {
  check_config(cfg);
  if (len_w <= 0 || len_l <= 0) {
    throw std::invalid_argument("simpo_loss: response lengths must be positive");
  }
  double z = cfg.beta * (lp_w / static_cast<double>(len_w) -
                         lp_l / static_cast<double>(len_l) - cfg.gamma_margin);
  return -log_sigmoid(z);
}

PrefMethod pref_method_from_string(const std::string& name) {
  if (name == "dpo") return PrefMethod::dpo;
  if (name == "dpop") return PrefMethod::dpop;
  if (name == "orpo") return PrefMethod::orpo;
  if (name == "simpo") return PrefMethod::simpo;
  throw std::invalid_argument("unknown preference method: " + name);
}

std::string pref_method_name(PrefMethod method) {
  switch (method) {
    case PrefMethod::dpo: return "dpo";
    case PrefMethod::dpop: return "dpop";
    case PrefMethod::orpo: return "orpo";
    case PrefMethod::simpo: return "simpo";
  }
  throw std::invalid_argument("unknown preference method");
}

bool pref_method_needs_reference(PrefMethod method) {
  return method == PrefMethod::dpo || method == PrefMethod::dpop;
}

namespace {

struct ExampleTerms {
  double loss = 0.0;
  double coeff_w = 0.0;  // d(loss)/d(lp_w)
  double coeff_l = 0.0;  // d(loss)/d(lp_l)
};

ExampleTerms example_terms(PrefMethod method, const PrefLossConfig& cfg, double lp_w,
                           double lp_l, double ref_w, double ref_l, long long len_w,
                           long long len_l) {
  // d(-log sigmoid(z))/dz = -sigmoid(-z)
  ExampleTerms t;
  switch (method) {
    case PrefMethod::dpo: {
      double z = cfg.beta * ((lp_w - ref_w) - (lp_l - ref_l));
      t.loss = -log_sigmoid(z);
      double s = sigmoid(-z);
      t.coeff_w = -s * cfg.beta;
      t.coeff_l = s * cfg.beta;
      break;
    }
    case PrefMethod::dpop: {
      bool active = ref_w - lp_w > 0.0;  // subgradient 0 at the boundary
      double z = cfg.beta * ((lp_w - ref_w) - (lp_l - ref_l)) -
                 cfg.lambda_penalty * std::max(0.0, ref_w - lp_w);
      t.loss = -log_sigmoid(z);
      double s = sigmoid(-z);
      t.coeff_w = -s * (cfg.beta + (active ? cfg.lambda_penalty : 0.0));
      t.coeff_l = s * cfg.beta;
      break;
    }
    case PrefMethod::orpo: {
      double nll = -lp_w / static_cast<double>(len_w);
      t.loss = nll + cfg.lambda_penalty * (lp_w - lp_l);
      t.coeff_w = -1.0 / static_cast<double>(len_w) + cfg.lambda_penalty;
      t.coeff_l = -cfg.lambda_penalty;
      break;
    }
    case PrefMethod::simpo: {
      double z = cfg.beta * (lp_w / static_cast<double>(len_w) -
                             lp_l / static_cast<double>(len_l) - cfg.gamma_margin);
      t.loss = -log_sigmoid(z);
      double s = sigmoid(-z);
      t.coeff_w = -s * cfg.beta / static_cast<double>(len_w);
      t.coeff_l = s * cfg.beta / static_cast<double>(len_l);
      break;
    }
  }
  return t;
}

double pref_batch_impl(const std::vector<PreferenceExample>& batch, const ModelParams& params,
                       const ModelParams* ref_params, PrefMethod method,
                       const PrefLossConfig& cfg, ModelParams* grads) {
  check_config(cfg);
  if (batch.empty()) {
    throw std::invalid_argument("pref loss: empty batch");
  }
  if (pref_method_needs_reference(method) && ref_params == nullptr) {
    throw std::invalid_argument("pref loss: method " + pref_method_name(method) +
                                " requires a reference model");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const PreferenceExample& ex : batch) {
    check_example(ex);
    double lp_w = seq_logprob(params, ex.prompt, ex.chosen);
    double lp_l = seq_logprob(params, ex.prompt, ex.rejected);
    double ref_w = 0.0, ref_l = 0.0;
    if (pref_method_needs_reference(method)) {
      ref_w = seq_logprob(*ref_params, ex.prompt, ex.chosen);
      ref_l = seq_logprob(*ref_params, ex.prompt, ex.rejected);
    }
    ExampleTerms t = example_terms(method, cfg, lp_w, lp_l, ref_w, ref_l,
                                   static_cast<long long>(ex.chosen.size()),
                                   static_cast<long long>(ex.rejected.size()));
    total += t.loss;
    if (grads) {
      seq_logprob_backward(params, ex.prompt, ex.chosen, t.coeff_w * inv_n, *grads);
      seq_logprob_backward(params, ex.prompt, ex.rejected, t.coeff_l * inv_n, *grads);
    }
  }
  return total * inv_n;
}

}  // namespace

double pref_loss_batch(const std::vector<PreferenceExample>& batch, const ModelParams& params,
                       const ModelParams* ref_params, PrefMethod method,
                       const PrefLossConfig& cfg) {
  return pref_batch_impl(batch, params, ref_params, method, cfg, nullptr);
}

double pref_gradients(const std::vector<PreferenceExample>& batch, const ModelParams& params,
                      const ModelParams* ref_params, PrefMethod method,
                      const PrefLossConfig& cfg, ModelParams& grads) {
  return pref_batch_impl(batch, params, ref_params, method, cfg, &grads);
}

namespace {

std::vector<int> parse_id_list(const std::string& field, std::size_t line_no) {
  std::vector<int> out;
  std::istringstream in(field);
  long long v = 0;
  while (in >> v) out.push_back(static_cast<int>(v));
  if (!in.eof()) {
    throw std::runtime_error("preference dataset: bad token id on line " +
                             std::to_string(line_no));
  }
  return out;
}

}  // namespace

std::vector<PreferenceExample> load_preference_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("preference dataset: cannot open " + path);
  std::vector<PreferenceExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw std::runtime_error("preference dataset: expected 3 tab-separated fields on line " +
                               std::to_string(line_no));
    }
    PreferenceExample ex;
    ex.prompt = parse_id_list(line.substr(0, tab1), line_no);
    ex.chosen = parse_id_list(line.substr(tab1 + 1, tab2 - tab1 - 1), line_no);
    ex.rejected = parse_id_list(line.substr(tab2 + 1), line_no);
    try {
      check_example(ex);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("preference dataset: line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void save_preference_dataset(const std::vector<PreferenceExample>& data,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("preference dataset: cannot open " + path + " for writing");
  for (const PreferenceExample& ex : data) {
    auto write_ids = [&](const std::vector<int>& ids) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out << ' ';
        out << ids[i];
      }
    };
    write_ids(ex.prompt);
    out << '\t';
    write_ids(ex.chosen);
    out << '\t';
    write_ids(ex.rejected);
    out << '\n';
  }
}

}  // namespace adaptlab
