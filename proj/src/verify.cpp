#include "adaptlab/verify.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

#include "adaptlab/data.hpp"
#include "adaptlab/embed_transfer.hpp"
#include "adaptlab/gradcheck.hpp"
#include "adaptlab/grpo.hpp"
#include "adaptlab/merge.hpp"
#include "adaptlab/model.hpp"
#include "adaptlab/numeric.hpp"
#include "adaptlab/oracles.hpp"
#include "adaptlab/pref_losses.hpp"
#include "adaptlab/schedules.hpp"
#include "adaptlab/tokenizer.hpp"
#include "adaptlab/upscale.hpp"

namespace adaptlab {

namespace {

constexpr double kGradTol = 1e-6;
constexpr double kFdStep = 1e-5;

std::string random_text(RngStream& rng, std::size_t max_len) {
  static const char* kMultibyte[] = {"ż", "ó", "ł", "ę", "→", "π", "漢", "🙂"};
  std::string s;
  std::size_t len = rng.next_u64() % (max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    switch (rng.next_u64() % 4) {
      case 0: s += static_cast<char>('a' + rng.next_u64() % 26); break;
      case 1: s += static_cast<char>(' ' + rng.next_u64() % 95); break;
      case 2: s += kMultibyte[rng.next_u64() % 8]; break;
      default: s += static_cast<char>(rng.next_u64() % 256); break;
    }
  }
  return s;
}

ModelParams random_model(std::uint64_t seed, std::size_t vocab = 9, std::size_t dim = 6,
                         std::size_t hidden = 8, std::size_t depth = 2) {
  RngStream rng(seed, 17);
  return init_model(vocab, dim, hidden, depth, 0.3, rng);
}

Batch random_batch(std::uint64_t seed, std::size_t vocab, std::size_t sequences = 2,
                   std::size_t length = 7) {
  RngStream rng(seed, 23);
  Batch batch;
  for (std::size_t s = 0; s < sequences; ++s) {
    MaskedSequence seq;
    for (std::size_t t = 0; t < length; ++t) {
      seq.tokens.push_back(static_cast<int>(rng.next_u64() % vocab));
      seq.loss_mask.push_back(rng.next_u64() % 3 != 0);
    }
    seq.loss_mask[0] = false;
    batch.sequences.push_back(std::move(seq));
  }
  return batch;
}

bool check_masked_nll_grad(bool inject_fault, std::string& detail) {
  ModelParams params = random_model(101);
  Batch batch = random_batch(102, params.vocab);
  ModelParams analytic = zeros_like(params);
  masked_nll_backward(params, batch, analytic);
  if (inject_fault) {
    analytic.embeddings(0, 0) += 1e-3;
  }
  ModelParams fd = finite_difference_gradient(
      params, [&](const ModelParams& p) { return masked_nll(p, batch).loss; }, kFdStep);
  double err = gradient_relative_error(analytic, fd);
  detail = "relative error " + std::to_string(err);
  return err < kGradTol;
}

bool check_pref_grads(std::string& detail) {
  ModelParams params = random_model(201);
  ModelParams ref = random_model(202);
  RngStream rng(203, 5);
  std::vector<PreferenceExample> batch = synthetic_pref_dataset(3, params.vocab, rng);
  PrefLossConfig cfg;
  cfg.beta = 0.7;
  cfg.lambda_penalty = 1.3;
  cfg.gamma_margin = 0.2;
  std::ostringstream all;
  bool ok = true;
  for (PrefMethod method :
       {PrefMethod::dpo, PrefMethod::dpop, PrefMethod::orpo, PrefMethod::simpo}) {
    const ModelParams* r = pref_method_needs_reference(method) ? &ref : nullptr;
    ModelParams analytic = zeros_like(params);
    pref_gradients(batch, params, r, method, cfg, analytic);
    ModelParams fd = finite_difference_gradient(
        params, [&](const ModelParams& p) { return pref_loss_batch(batch, p, r, method, cfg); },
        kFdStep);
    double err = gradient_relative_error(analytic, fd);
    all << pref_method_name(method) << "=" << err << " ";
    ok = ok && err < kGradTol;
  }
  detail = all.str();
  return ok;
}

bool check_grpo_grad(std::string& detail) {
  ModelParams params = random_model(301);
  ModelParams old_params = random_model(302);
  ModelParams ref = random_model(303);
  GRPOConfig cfg;
  cfg.group_size = 3;
  cfg.epsilon_clip = 0.2;
  cfg.kl_coeff = 0.5;
  cfg.sigma_tolerance = 1e-8;
  cfg.response_len = 2;
  RngStream rng(304, 9);
  std::vector<std::vector<int>> prompts = {{1, 2}, {3, 4, 5}};
  RewardFn reward = [](const std::vector<int>& prompt, const std::vector<int>& response) {
    return static_cast<double>((prompt.size() + response[0]) % 2);
  };
  std::vector<RolloutGroup> groups = sample_rollouts(old_params, ref, prompts, reward, cfg, rng);
  ModelParams analytic = zeros_like(params);
  grpo_total_backward(params, groups, cfg, analytic);
  ModelParams fd = finite_difference_gradient(
      params,
      [&](const ModelParams& p) {
        std::vector<RolloutGroup> copy = groups;
        return grpo_total_value(p, copy, cfg);
      },
      kFdStep);
  double err = gradient_relative_error(analytic, fd);
  detail = "relative error " + std::to_string(err);
  return err < kGradTol;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
  std::vector<CheckResult> results;
  auto check = [&](const std::string& name, const std::function<bool(std::string&)>& fn) {
    CheckResult r;
    r.name = name;
    try {
      r.passed = fn(r.detail);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    results.push_back(std::move(r));
  };

  check("alr-identity", [](std::string&) {
    ALRConfig cfg{7e-6, 2048};
    return alr(cfg, 2048) == 7e-6 && alr(cfg, 4 * 2048) == 1.4e-5 && alr(cfg, 0) == 0.0;
  });

  check("dus-goldens", [](std::string& detail) {
    LayerPlan plan = dus_plan(36, 8);
    LayerPlan wide = outermost_duplicate(plan, 2);
    detail = "s=" + std::to_string(plan.result_depth()) + ", +2 outer=" +
             std::to_string(wide.result_depth());
    return plan.result_depth() == 56 && wide.result_depth() == 60;
  });

  check("loss-closed-forms", [](std::string&) {
    PrefLossConfig cfg;
    cfg.beta = 0.1;
    cfg.lambda_penalty = 2.5;
    bool ok = std::abs(dpo_loss(-1.0, -2.0, -1.0, -2.0, cfg) - std::log(2.0)) <= 1e-9;
    ok = ok && dpop_loss(-1.0, -2.5, -1.5, -2.0, cfg) == dpo_loss(-1.0, -2.5, -1.5, -2.0, cfg);
    ok = ok && simpo_loss(-2.0, -8.0, 3, 5, cfg) == simpo_loss(-4.0, -16.0, 6, 10, cfg);
    ok = ok && orpo_loss(1.25, -3.0, -3.0, cfg) == 1.25;
    return ok;
  });

  check("sparsemax-oracle-grid", [](std::string& detail) {
    const double grid[] = {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
    long long cases = 0;
    for (std::size_t len = 1; len <= 4; ++len) {
      std::vector<std::size_t> idx(len, 0);
      while (true) {
        Vector z(len);
        for (std::size_t i = 0; i < len; ++i) z[i] = grid[idx[i]];
        Vector fast = sparsemax(z);
        Vector oracle = simplex_projection_bruteforce(z);
        for (std::size_t i = 0; i < len; ++i) {
          if (std::abs(fast[i] - oracle[i]) > 1e-12) return false;
        }
        ++cases;
        std::size_t p = 0;
        while (p < len && ++idx[p] == 6) idx[p++] = 0;
        if (p == len) break;
      }
    }
    detail = std::to_string(cases) + " grid vectors";
    return true;
  });

  check("sparsemax-shift-invariance", [](std::string&) {
    RngStream rng(11, 3);
    for (int rep = 0; rep < 50; ++rep) {
      std::size_t len = 2 + rng.next_u64() % 5;
      Vector z(len);
      for (double& v : z) v = 4.0 * rng.next_unit() - 2.0;
      double c = 10.0 * rng.next_unit() - 5.0;
      Vector a = sparsemax(z);
      Vector shifted = z;
      for (double& v : shifted) v += c;
      Vector b = sparsemax(shifted);
      for (std::size_t i = 0; i < len; ++i) {
        if (std::abs(a[i] - b[i]) > 1e-12) return false;
      }
    }
    return true;
  });

  check("softmax-shift-invariance", [](std::string&) {
    RngStream rng(12, 3);
    for (int rep = 0; rep < 50; ++rep) {
      std::size_t len = 1 + rng.next_u64() % 6;
      Vector z(len);
      for (double& v : z) v = 6.0 * rng.next_unit() - 3.0;
      Vector a = softmax(z);
      double sum = 0.0;
      for (double v : a) sum += v;
      if (std::abs(sum - 1.0) > 1e-12) return false;
      Vector shifted = z;
      for (double& v : shifted) v += 123.5;
      Vector b = softmax(shifted);
      for (std::size_t i = 0; i < len; ++i) {
        if (std::abs(a[i] - b[i]) > 1e-12) return false;
      }
    }
    return true;
  });

  check("rope-norm-preservation", [](std::string&) {
    RngStream rng(13, 3);
    for (int rep = 0; rep < 100; ++rep) {
      std::array<double, 2> pair = {2.0 * rng.next_gaussian(), 2.0 * rng.next_gaussian()};
      long pos = static_cast<long>(rng.next_u64() % 512);
      std::size_t dim = 2 * (1 + rng.next_u64() % 8);
      std::size_t pi = rng.next_u64() % (dim / 2);
      auto rotated = rope_rotate(pair, pos, 1e6, pi, dim);
      double n0 = std::hypot(pair[0], pair[1]);
      double n1 = std::hypot(rotated[0], rotated[1]);
      if (std::abs(n0 - n1) > 1e-12) return false;
    }
    return true;
  });

  check("rmsnorm-unit-rms", [](std::string&) {
    RngStream rng(14, 3);
    for (int rep = 0; rep < 50; ++rep) {
      std::size_t len = 1 + rng.next_u64() % 8;
      Vector x(len);
      for (double& v : x) v = rng.next_gaussian();
      if (l2_norm(x) == 0.0) continue;
      Vector out = rmsnorm(x, Vector(len, 1.0), 0.0);
      double ms = 0.0;
      for (double v : out) ms += v * v;
      if (std::abs(std::sqrt(ms / static_cast<double>(len)) - 1.0) > 1e-9) return false;
    }
    return true;
  });

  check("rng-reproducibility", [](std::string&) {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 100; ++i) {
      if (a.next_u64() != b.next_u64()) return false;
    }
    RngStream c = RngStream(42, 7).split("child");
    RngStream d = RngStream(42, 7).split("child");
    for (int i = 0; i < 10; ++i) {
      if (c.next_gaussian() != d.next_gaussian()) return false;
    }
    return true;
  });

  check("masked-nll-gradcheck",
        [&](std::string& detail) { return check_masked_nll_grad(opts.inject_gradient_fault, detail); });

  check("pref-loss-gradcheck", [](std::string& detail) { return check_pref_grads(detail); });

  check("grpo-gradcheck", [](std::string& detail) { return check_grpo_grad(detail); });

  check("grpo-math", [](std::string&) {
    std::vector<double> adv = group_advantages({1.0, 0.0, 1.0, 0.0}, 1e-8);
    if (adv != std::vector<double>{1.0, -1.0, 1.0, -1.0}) return false;
    if (group_advantages({3.0, 3.0, 3.0}, 1e-8) != std::vector<double>(3, 0.0)) return false;
    RngStream rng(15, 3);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> rewards(4 + rng.next_u64() % 5);
      for (double& r : rewards) r = rng.next_gaussian();
      std::vector<double> a = group_advantages(rewards, 1e-8);
      double mu = 0.0, var = 0.0;
      for (double v : a) mu += v;
      mu /= static_cast<double>(a.size());
      for (double v : a) var += (v - mu) * (v - mu);
      var /= static_cast<double>(a.size());
      if (std::abs(mu) > 1e-9 || std::abs(std::sqrt(var) - 1.0) > 1e-9) return false;
    }
    GRPOConfig cfg;
    cfg.group_size = 4;
    RolloutGroup g;
    g.prompt = {1};
    g.responses.assign(4, {1});
    g.rewards = {1.0, 0.0, 1.0, 0.0};
    g.lp_old = {-1.0, -2.0, -0.5, -3.0};
    g.lp_current = g.lp_old;
    g.lp_ref = g.lp_old;
    if (grpo_objective(g, cfg) != 0.0) return false;
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> cur(3), ref(3);
      for (double& v : cur) v = -5.0 * rng.next_unit();
      for (double& v : ref) v = -5.0 * rng.next_unit();
      if (kl_penalty_k3(cur, ref) < 0.0) return false;
    }
    return kl_penalty_k3({-1.0, -2.0}, {-1.0, -2.0}) == 0.0;
  });

  check("tokenizer-round-trip", [](std::string&) {
    RngStream corpus_rng(16, 3);
    std::vector<std::string> corpus = synthetic_text_corpus(40, corpus_rng);
    TokenizerModel model = train_bpe(corpus, 280, {true, true});
    RngStream rng(17, 3);
    for (int rep = 0; rep < 200; ++rep) {
      std::string text = random_text(rng, 40);
      if (model.decode(model.encode(text)) != text) return false;
    }
    return true;
  });

  check("efficiency-identities", [](std::string&) {
    TokenizerModel byte_model;
    EfficiencyReport r = efficiency_metrics(byte_model, "ab ab");
    return r.token_count == 5 && r.char_count == 5 && r.word_count == 2 &&
           std::abs(r.cpt() - 1.0) < 1e-15 && std::abs(r.tpw() - 2.5) < 1e-15;
  });

  check("fvt-oracle", [](std::string&) {
    RngStream rng(18, 3);
    EmbeddingMatrix old;
    old.rows = Matrix(6, 4);
    for (double& v : old.rows.data()) v = rng.next_gaussian();
    VocabAlignment align;
    align.overlap = {std::optional<int>(0), std::nullopt, std::optional<int>(3), std::nullopt,
                     std::nullopt};
    align.decomposition = {{0}, {1, 2}, {3}, {4, 5, 0}, {2}};
    std::vector<std::string> vocab = {"a", "bc", "d", "efa", "c"};
    EmbeddingMatrix out = init_fvt(old, align, vocab);
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      Vector expect(4, 0.0);
      if (align.overlap[id]) {
        expect = old.rows.row(static_cast<std::size_t>(*align.overlap[id]));
      } else {
        for (int p : align.decomposition[id]) {
          for (std::size_t c = 0; c < 4; ++c) expect[c] += old.rows(static_cast<std::size_t>(p), c);
        }
        for (double& v : expect) v /= static_cast<double>(align.decomposition[id].size());
      }
      for (std::size_t c = 0; c < 4; ++c) {
        if (out.rows(id, c) != expect[c]) return false;
      }
    }
    return true;
  });

  check("focus-weight-sums", [](std::string&) {
    RngStream rng(19, 3);
    AuxEmbedding aux;
    aux.dim = 3;
    std::vector<std::string> vocab = {"a", "b", "c", "x", "y"};
    for (const std::string& t : vocab) {
      Vector v(3);
      for (double& e : v) e = rng.next_gaussian();
      aux.vectors[t] = v;
    }
    VocabAlignment align;
    align.overlap = {std::optional<int>(0), std::optional<int>(1), std::optional<int>(2),
                     std::nullopt, std::nullopt};
    align.decomposition = {{0}, {1}, {2}, {0, 1}, {2, 0}};
    for (int id : {3, 4}) {
      Vector w = focus_weights(aux, align, vocab, id);
      double sum = 0.0;
      for (double v : w) {
        if (v < 0.0) return false;
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12) return false;
    }
    return true;
  });

  check("linear-exact-affine", [](std::string&) {
    // old rows are an exact affine image of the aux space.
    AuxEmbedding aux;
    aux.dim = 2;
    std::vector<std::string> vocab = {"t0", "t1", "t2", "t3", "new"};
    Vector auxes[] = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {2.0, -1.0}, {3.0, 2.0}};
    for (std::size_t i = 0; i < 5; ++i) aux.vectors[vocab[i]] = auxes[i];
    EmbeddingMatrix old;
    old.rows = Matrix(4, 2);
    auto apply = [](const Vector& a) {
      return Vector{2.0 * a[0] - a[1] + 0.5, a[0] + 3.0 * a[1] - 1.0};
    };
    for (std::size_t i = 0; i < 4; ++i) old.rows.set_row(i, apply(auxes[i]));
    VocabAlignment align;
    align.overlap = {0, 1, 2, 3, std::nullopt};
    align.decomposition = {{0}, {1}, {2}, {3}, {0, 1}};
    EmbeddingMatrix out = init_linear(old, aux, align, vocab);
    Vector expect = apply(auxes[4]);
    return std::abs(out.rows(4, 0) - expect[0]) < 1e-9 &&
           std::abs(out.rows(4, 1) - expect[1]) < 1e-9;
  });

  check("freeze-protocol-step", [](std::string&) {
    ModelParams params = random_model(401, 9, 6, 8, 4);
    Batch batch = random_batch(402, params.vocab);
    LayerPlan plan = dus_plan(2, 0);  // 4 result layers
    plan = outermost_duplicate(plan, 0);
    FreezeMask mask = adaptation_freeze_mask(plan, {0, 3});
    std::vector<std::uint64_t> before = group_checksums(params);
    ModelParams grads = zeros_like(params);
    masked_nll_backward(params, batch, grads);
    AdamWState opt = init_adamw(params, AdamWConfig{});
    adamw_step(params, grads, opt, 1e-3, &mask);
    std::vector<std::uint64_t> after = group_checksums(params);
    // groups: 0 embeddings, 1..4 layers, 5 head
    bool ok = before[0] != after[0];          // embeddings trained
    ok = ok && before[1] != after[1];         // duplicated layer 0
    ok = ok && before[2] == after[2];         // frozen
    ok = ok && before[3] == after[3];         // frozen
    ok = ok && before[4] != after[4];         // duplicated layer 3
    ok = ok && before[5] == after[5];         // head frozen
    return ok;
  });

  check("merge-identities", [](std::string&) {
    ModelParams m = random_model(501);
    ModelParams copy1 = linear_merge({m}, {1.0});
    ModelParams copy2 = linear_merge({m, m}, {0.5, 0.5});
    return params_equal(copy1, m) && params_equal(copy2, m);
  });

  check("schedule-continuity", [](std::string&) {
    ScheduleConfig cfg{1e-3, 1e-5, 50, 300, ScheduleShape::cosine};
    double before = schedule_lr(cfg, 49);
    double at = schedule_lr(cfg, 50);
    if (std::abs(at - cfg.peak_lr) > 1e-18) return false;
    if (std::abs(at - before) > cfg.peak_lr / 50.0 + 1e-12) return false;
    double prev = at;
    for (long long s = 51; s <= 300; ++s) {
      double lr = schedule_lr(cfg, s);
      if (lr > prev + 1e-18) return false;
      prev = lr;
    }
    return std::abs(schedule_lr(cfg, 300) - cfg.final_lr) < 1e-18;
  });

  check("pack-conservation", [](std::string&) {
    RngStream rng(20, 3);
    std::vector<MaskedSequence> samples = synthetic_sft_corpus(25, rng);
    std::vector<MaskedSequence> packed = pack_samples(samples, 32);
    long long before = 0, after = 0;
    for (const MaskedSequence& s : samples) {
      for (bool b : s.loss_mask) before += b ? 1 : 0;
    }
    for (const MaskedSequence& s : packed) {
      for (bool b : s.loss_mask) after += b ? 1 : 0;
      if (s.tokens.size() > 32) return false;
    }
    return before == after;
  });

  check("checkpoint-round-trip", [](std::string&) {
    ModelParams m = random_model(601);
    std::string path = "/tmp/adaptlab_verify_ckpt.bin";
    save_checkpoint(m, path);
    ModelParams back = load_checkpoint(path);
    return params_equal(m, back);
  });

  // Duplicates in the check list would make the report ambiguous.
  std::set<std::string> names;
  for (const CheckResult& r : results) {
    if (!names.insert(r.name).second) {
      results.push_back({"unique-check-names", false, "duplicate check name " + r.name});
      return results;
    }
  }
  return results;
}

int print_verification(std::ostream& out, const std::vector<CheckResult>& results) {
  int failed = 0;
  for (const CheckResult& r : results) {
    out << (r.passed ? "[ok]   " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << '\n';
    if (!r.passed) ++failed;
  }
  out << results.size() << " checks, " << failed << " failed\n";
  return failed;
}

}  // namespace adaptlab
