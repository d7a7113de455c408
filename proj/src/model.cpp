#include "adaptlab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace adaptlab {

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.next_gaussian();
  return m;
}

double swish(double t) { return t * sigmoid(t); }

double swish_grad(double t) {
  double s = sigmoid(t);
  return s * (1.0 + t * (1.0 - s));
}

void check_tokens(const ModelParams& p, const std::vector<int>& tokens) {
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= p.vocab) {
      throw std::invalid_argument("model: token id out of range");
    }
  }
}

}  // namespace

std::size_t ModelParams::parameter_count() const {
  std::size_t n = embeddings.size() + head.size();
  for (const LayerParams& l : layers) {
    n += l.w1.size() + l.b1.size() + l.w2.size() + l.b2.size() + l.gain.size();
  }
  return n;
}

ModelParams init_model(std::size_t vocab, std::size_t dim, std::size_t hidden,
                       std::size_t depth, double scale, RngStream& rng) {
  if (vocab == 0 || dim == 0 || hidden == 0) {
    throw std::invalid_argument("init_model: zero dimension");
  }
  ModelParams p;
  p.vocab = vocab;
  p.dim = dim;
  p.hidden = hidden;
  p.embeddings = gaussian_matrix(vocab, dim, scale, rng);
  p.layers.resize(depth);
  for (LayerParams& l : p.layers) {
    l.w1 = gaussian_matrix(dim, 2 * hidden, scale, rng);
    l.b1.assign(2 * hidden, 0.0);
    l.w2 = gaussian_matrix(hidden, dim, scale, rng);
    l.b2.assign(dim, 0.0);
    l.gain.assign(dim, 1.0);
  }
  p.head = gaussian_matrix(dim, vocab, scale, rng);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.vocab = p.vocab;
  z.dim = p.dim;
  z.hidden = p.hidden;
  z.embeddings = Matrix(p.embeddings.rows(), p.embeddings.cols());
  z.layers.resize(p.layers.size());
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const LayerParams& l = p.layers[i];
    z.layers[i].w1 = Matrix(l.w1.rows(), l.w1.cols());
    z.layers[i].b1.assign(l.b1.size(), 0.0);
    z.layers[i].w2 = Matrix(l.w2.rows(), l.w2.cols());
    z.layers[i].b2.assign(l.b2.size(), 0.0);
    z.layers[i].gain.assign(l.gain.size(), 0.0);
  }
  z.head = Matrix(p.head.rows(), p.head.cols());
  return z;
}

bool same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.vocab != b.vocab || a.dim != b.dim || a.hidden != b.hidden ||
      a.layers.size() != b.layers.size()) {
    return false;
  }
  if (!a.embeddings.same_shape(b.embeddings) || !a.head.same_shape(b.head)) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const LayerParams& x = a.layers[i];
    const LayerParams& y = b.layers[i];
    if (!x.w1.same_shape(y.w1) || x.b1.size() != y.b1.size() || !x.w2.same_shape(y.w2) ||
        x.b2.size() != y.b2.size() || x.gain.size() != y.gain.size()) {
      return false;
    }
  }
  return true;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  if (!same_shape(a, b)) return false;
  bool equal = true;
  std::vector<double> flat_a;
  flat_a.reserve(a.parameter_count());
  for_each_param(a, [&](double v) { flat_a.push_back(v); });
  std::size_t i = 0;
  for_each_param(b, [&](double v) {
    if (flat_a[i++] != v) equal = false;
  });
  return equal;
}

ForwardTrace forward(const ModelParams& p, const std::vector<int>& tokens) {
  check_tokens(p, tokens);
  const std::size_t T = tokens.size();
  const std::size_t d = p.dim;
  const std::size_t f = p.hidden;

  ForwardTrace tr;
  tr.tokens = tokens;
  tr.layers.resize(p.depth());

  std::vector<Vector> cur(T);
  for (std::size_t t = 0; t < T; ++t) {
    cur[t] = p.embeddings.row(static_cast<std::size_t>(tokens[t]));
  }

  for (std::size_t li = 0; li < p.depth(); ++li) {
    const LayerParams& l = p.layers[li];
    ForwardTrace::LayerTrace& lt = tr.layers[li];
    lt.mean.resize(T);
    lt.rms.resize(T);
    lt.normed.resize(T);
    lt.preact.resize(T);
    lt.gated.resize(T);

    Vector running(d, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < d; ++i) running[i] += cur[t][i];
      Vector& c = lt.mean[t];
      c.resize(d);
      double inv = 1.0 / static_cast<double>(t + 1);
      for (std::size_t i = 0; i < d; ++i) c[i] = running[i] * inv;

      double ms = 0.0;
      for (double v : c) ms += v * v;
      ms /= static_cast<double>(d);
      double r = std::sqrt(ms + kRmsNormEps);
      lt.rms[t] = r;
      Vector& z = lt.normed[t];
      z.resize(d);
      for (std::size_t i = 0; i < d; ++i) z[i] = c[i] * l.gain[i] / r;

      Vector& uv = lt.preact[t];
      uv.assign(2 * f, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        const double zi = z[i];
        const double* w = l.w1.row_ptr(i);
        for (std::size_t k = 0; k < 2 * f; ++k) uv[k] += zi * w[k];
      }
      for (std::size_t k = 0; k < 2 * f; ++k) uv[k] += l.b1[k];

      Vector& s = lt.gated[t];
      s.resize(f);
      for (std::size_t j = 0; j < f; ++j) s[j] = swish(uv[j]) * uv[f + j];

      Vector y(d, 0.0);
      for (std::size_t j = 0; j < f; ++j) {
        const double sj = s[j];
        const double* w = l.w2.row_ptr(j);
        for (std::size_t i = 0; i < d; ++i) y[i] += sj * w[i];
      }
      for (std::size_t i = 0; i < d; ++i) cur[t][i] += y[i] + l.b2[i];
    }
  }

  tr.final_hidden = cur;
  tr.logprobs.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vector logits(p.vocab, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double hi = cur[t][i];
      const double* w = p.head.row_ptr(i);
      for (std::size_t v = 0; v < p.vocab; ++v) logits[v] += hi * w[v];
    }
    tr.logprobs[t] = log_softmax(logits);
  }
  return tr;
}

std::vector<Vector> forward_logprobs(const ModelParams& p, const std::vector<int>& tokens) {
  return forward(p, tokens).logprobs;
}

void backward(const ModelParams& p, const ForwardTrace& trace,
              const std::vector<Vector>& dlogits, ModelParams& grads) {
  const std::size_t T = trace.tokens.size();
  const std::size_t d = p.dim;
  const std::size_t f = p.hidden;
  if (dlogits.size() != T) {
    throw std::invalid_argument("backward: dlogits length mismatch");
  }
  if (!same_shape(p, grads)) {
    throw std::invalid_argument("backward: grads shape mismatch");
  }

  // Through the output head; log_softmax backward folds into
  // dlogits_raw = dlogits - softmax * sum(dlogits).
  std::vector<Vector> dh(T, Vector(d, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    if (dlogits[t].size() != p.vocab) {
      throw std::invalid_argument("backward: dlogits width mismatch");
    }
    double dsum = 0.0;
    for (double v : dlogits[t]) dsum += v;
    Vector draw(p.vocab);
    for (std::size_t v = 0; v < p.vocab; ++v) {
      draw[v] = dlogits[t][v] - std::exp(trace.logprobs[t][v]) * dsum;
    }
    const Vector& h = trace.final_hidden[t];
    for (std::size_t i = 0; i < d; ++i) {
      double* gw = grads.head.row_ptr(i);
      const double* w = p.head.row_ptr(i);
      double acc = 0.0;
      for (std::size_t v = 0; v < p.vocab; ++v) {
        gw[v] += h[i] * draw[v];
        acc += w[v] * draw[v];
      }
      dh[t][i] = acc;
    }
  }

  for (std::size_t li = p.depth(); li-- > 0;) {
    const LayerParams& l = p.layers[li];
    LayerParams& gl = grads.layers[li];
    const ForwardTrace::LayerTrace& lt = trace.layers[li];

    std::vector<Vector> dmean(T, Vector(d, 0.0));
    for (std::size_t t = 0; t < T; ++t) {
      const Vector& dy = dh[t];  // residual: same vector feeds both paths

      Vector ds(f, 0.0);
      for (std::size_t j = 0; j < f; ++j) {
        const double sj = lt.gated[t][j];
        double* gw = gl.w2.row_ptr(j);
        const double* w = l.w2.row_ptr(j);
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          gw[i] += sj * dy[i];
          acc += w[i] * dy[i];
        }
        ds[j] = acc;
      }
      for (std::size_t i = 0; i < d; ++i) gl.b2[i] += dy[i];

      Vector duv(2 * f);
      for (std::size_t j = 0; j < f; ++j) {
        const double a = lt.preact[t][j];
        const double bv = lt.preact[t][f + j];
        duv[j] = ds[j] * bv * swish_grad(a);
        duv[f + j] = ds[j] * swish(a);
      }

      Vector dz(d, 0.0);
      const Vector& z = lt.normed[t];
      for (std::size_t i = 0; i < d; ++i) {
        double* gw = gl.w1.row_ptr(i);
        const double* w = l.w1.row_ptr(i);
        double acc = 0.0;
        for (std::size_t k = 0; k < 2 * f; ++k) {
          gw[k] += z[i] * duv[k];
          acc += w[k] * duv[k];
        }
        dz[i] = acc;
      }
      for (std::size_t k = 0; k < 2 * f; ++k) gl.b1[k] += duv[k];

      const Vector& c = lt.mean[t];
      const double r = lt.rms[t];
      double inner = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        gl.gain[i] += dz[i] * c[i] / r;
        inner += dz[i] * l.gain[i] * c[i];
      }
      const double scale = inner / (static_cast<double>(d) * r * r * r);
      for (std::size_t i = 0; i < d; ++i) {
        dmean[t][i] = dz[i] * l.gain[i] / r - c[i] * scale;
      }
    }

    // Prefix-mean backward: dinput[u] += sum_{t >= u} dmean[t] / (t+1).
    Vector acc(d, 0.0);
    for (std::size_t t = T; t-- > 0;) {
      double inv = 1.0 / static_cast<double>(t + 1);
      for (std::size_t i = 0; i < d; ++i) acc[i] += dmean[t][i] * inv;
      for (std::size_t i = 0; i < d; ++i) dh[t][i] += acc[i];
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    double* row = grads.embeddings.row_ptr(static_cast<std::size_t>(trace.tokens[t]));
    for (std::size_t i = 0; i < d; ++i) row[i] += dh[t][i];
  }
}

double seq_logprob(const ModelParams& p, const std::vector<int>& prompt,
                   const std::vector<int>& response) {
  if (response.empty()) {
    throw std::invalid_argument("seq_logprob: empty response");
  }
  if (prompt.empty()) {
    throw std::invalid_argument("seq_logprob: empty prompt");
  }
  std::vector<int> seq = prompt;
  seq.insert(seq.end(), response.begin(), response.end());
  std::vector<Vector> lp = forward_logprobs(p, seq);
  double total = 0.0;
  for (std::size_t j = 0; j < response.size(); ++j) {
    std::size_t pos = prompt.size() + j;
    total += lp[pos - 1][static_cast<std::size_t>(seq[pos])];
  }
  return total;
}

double seq_logprob_backward(const ModelParams& p, const std::vector<int>& prompt,
                            const std::vector<int>& response, double coeff,
                            ModelParams& grads) {
  if (response.empty()) {
    throw std::invalid_argument("seq_logprob: empty response");
  }
  if (prompt.empty()) {
    throw std::invalid_argument("seq_logprob: empty prompt");
  }
  std::vector<int> seq = prompt;
  seq.insert(seq.end(), response.begin(), response.end());
  ForwardTrace tr = forward(p, seq);
  double total = 0.0;
  std::vector<Vector> dlogits(seq.size(), Vector(p.vocab, 0.0));
  for (std::size_t j = 0; j < response.size(); ++j) {
    std::size_t pos = prompt.size() + j;
    total += tr.logprobs[pos - 1][static_cast<std::size_t>(seq[pos])];
    dlogits[pos - 1][static_cast<std::size_t>(seq[pos])] += coeff;
  }
  backward(p, tr, dlogits, grads);
  return total;
}

namespace {

long long count_unmasked(const Batch& batch) {
  long long n = 0;
  for (const MaskedSequence& s : batch.sequences) {
    if (s.tokens.size() != s.loss_mask.size()) {
      throw std::invalid_argument("masked_nll: mask length mismatch");
    }
    for (std::size_t t = 1; t < s.tokens.size(); ++t) {
      if (s.loss_mask[t]) ++n;
    }
  }
  return n;
}

}  // namespace

LossResult masked_nll(const ModelParams& p, const Batch& batch) {
  LossResult res;
  res.unmasked_tokens = count_unmasked(batch);
  if (res.unmasked_tokens == 0) return res;
  double total = 0.0;
  for (const MaskedSequence& s : batch.sequences) {
    if (s.tokens.empty()) continue;
    std::vector<Vector> lp = forward_logprobs(p, s.tokens);
    for (std::size_t t = 1; t < s.tokens.size(); ++t) {
      if (s.loss_mask[t]) total -= lp[t - 1][static_cast<std::size_t>(s.tokens[t])];
    }
  }
  res.loss = total / static_cast<double>(res.unmasked_tokens);
  return res;
}

LossResult masked_nll_backward(const ModelParams& p, const Batch& batch, ModelParams& grads) {
  LossResult res;
  res.unmasked_tokens = count_unmasked(batch);
  if (res.unmasked_tokens == 0) return res;
  const double inv = 1.0 / static_cast<double>(res.unmasked_tokens);
  double total = 0.0;
  for (const MaskedSequence& s : batch.sequences) {
    if (s.tokens.empty()) continue;
    ForwardTrace tr = forward(p, s.tokens);
    std::vector<Vector> dlogits(s.tokens.size(), Vector(p.vocab, 0.0));
    for (std::size_t t = 1; t < s.tokens.size(); ++t) {
      if (s.loss_mask[t]) {
        total -= tr.logprobs[t - 1][static_cast<std::size_t>(s.tokens[t])];
        dlogits[t - 1][static_cast<std::size_t>(s.tokens[t])] -= inv;
      }
    }
    backward(p, tr, dlogits, grads);
  }
  res.loss = total / static_cast<double>(res.unmasked_tokens);
  return res;
}

std::vector<int> sample_response(const ModelParams& p, const std::vector<int>& prompt,
                                 std::size_t length, RngStream& rng) {
  if (prompt.empty()) {
    throw std::invalid_argument("sample_response: empty prompt");
  }
  std::vector<int> seq = prompt;
  std::vector<int> out;
  out.reserve(length);
  for (std::size_t step = 0; step < length; ++step) {
    std::vector<Vector> lp = forward_logprobs(p, seq);
    const Vector& last = lp.back();
    double u = rng.next_unit();
    double cum = 0.0;
    int pick = static_cast<int>(p.vocab) - 1;
    for (std::size_t v = 0; v < p.vocab; ++v) {
      cum += std::exp(last[v]);
      if (u < cum) {
        pick = static_cast<int>(v);
        break;
      }
    }
    out.push_back(pick);
    seq.push_back(pick);
  }
  return out;
}

FreezeMask FreezeMask::all_trainable(std::size_t depth) {
  FreezeMask m;
  m.embeddings = true;
  m.layers.assign(depth, true);
  m.head = true;
  return m;
}

AdamWState init_adamw(const ModelParams& params, const AdamWConfig& cfg) {
  AdamWState st;
  st.cfg = cfg;
  st.step = 0;
  st.m = zeros_like(params);
  st.v = zeros_like(params);
  return st;
}

namespace {

void adamw_update_span(double* w, const double* g, double* m, double* v, std::size_t n,
                       const AdamWConfig& cfg, double lr, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w[i]);
  }
}

}  // namespace

void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state, double lr,
                const FreezeMask* mask) {
  if (!same_shape(params, grads) || !same_shape(params, state.m)) {
    throw std::invalid_argument("adamw_step: shape mismatch");
  }
  if (mask && mask->layers.size() != params.depth()) {
    throw std::invalid_argument("adamw_step: freeze mask depth mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));

  auto update_vec = [&](Vector& w, const Vector& g, Vector& m, Vector& v) {
    adamw_update_span(w.data(), g.data(), m.data(), v.data(), w.size(), state.cfg, lr, bc1, bc2);
  };
  auto update_mat = [&](Matrix& w, const Matrix& g, Matrix& m, Matrix& v) {
    adamw_update_span(w.data().data(), g.data().data(), m.data().data(), v.data().data(),
                      w.size(), state.cfg, lr, bc1, bc2);
  };

  if (!mask || mask->embeddings) {
    update_mat(params.embeddings, grads.embeddings, state.m.embeddings, state.v.embeddings);
  }
  for (std::size_t li = 0; li < params.depth(); ++li) {
    if (mask && !mask->layers[li]) continue;
    update_mat(params.layers[li].w1, grads.layers[li].w1, state.m.layers[li].w1,
               state.v.layers[li].w1);
    update_vec(params.layers[li].b1, grads.layers[li].b1, state.m.layers[li].b1,
               state.v.layers[li].b1);
    update_mat(params.layers[li].w2, grads.layers[li].w2, state.m.layers[li].w2,
               state.v.layers[li].w2);
    update_vec(params.layers[li].b2, grads.layers[li].b2, state.m.layers[li].b2,
               state.v.layers[li].b2);
    update_vec(params.layers[li].gain, grads.layers[li].gain, state.m.layers[li].gain,
               state.v.layers[li].gain);
  }
  if (!mask || mask->head) {
    update_mat(params.head, grads.head, state.m.head, state.v.head);
  }
}

double clip_grad_norm(ModelParams& grads, double max_norm) {
  if (max_norm <= 0.0) {
    throw std::invalid_argument("clip_grad_norm: max_norm must be positive");
  }
  double sq = 0.0;
  for_each_param(static_cast<const ModelParams&>(grads), [&](double v) { sq += v * v; });
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for_each_param(grads, [&](double& v) { v *= scale; });
  }
  return norm;
}

std::vector<MaskedSequence> pack_samples(const std::vector<MaskedSequence>& samples,
                                         std::size_t max_len) {
  std::vector<MaskedSequence> packed;
  MaskedSequence cur;
  for (const MaskedSequence& s : samples) {
    if (s.tokens.empty()) {
      throw std::invalid_argument("pack_samples: empty sample");
    }
    if (s.tokens.size() != s.loss_mask.size()) {
      throw std::invalid_argument("pack_samples: mask length mismatch");
    }
    if (s.tokens.size() > max_len) {
      throw std::invalid_argument("pack_samples: sample longer than max_len");
    }
    std::size_t needed = cur.tokens.empty() ? s.tokens.size() : cur.tokens.size() + 1 + s.tokens.size();
    if (needed > max_len && !cur.tokens.empty()) {
      packed.push_back(std::move(cur));
      cur = MaskedSequence{};
    }
    if (!cur.tokens.empty()) {
      cur.tokens.push_back(kSeparatorToken);
      cur.loss_mask.push_back(false);
    }
    cur.tokens.insert(cur.tokens.end(), s.tokens.begin(), s.tokens.end());
    cur.loss_mask.insert(cur.loss_mask.end(), s.loss_mask.begin(), s.loss_mask.end());
  }
  if (!cur.tokens.empty()) packed.push_back(std::move(cur));
  return packed;
}

void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out << "adaptlab-ckpt 1 " << p.vocab << ' ' << p.dim << ' ' << p.hidden << ' ' << p.depth()
      << '\n';
  for_each_param(p, [&](double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(double));
  });
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  std::size_t vocab = 0, dim = 0, hidden = 0, depth = 0;
  in >> magic >> version >> vocab >> dim >> hidden >> depth;
  if (magic != "adaptlab-ckpt" || version != 1) {
    throw std::runtime_error("checkpoint: bad header in " + path);
  }
  in.ignore(1, '\n');

  RngStream dummy(0, 0);
  ModelParams p = init_model(vocab, dim, hidden, depth, 0.0, dummy);
  bool ok = true;
  for_each_param(p, [&](double& v) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(double))) ok = false;
  });
  if (!ok) throw std::runtime_error("checkpoint: truncated parameter data in " + path);
  char extra;
  if (in.read(&extra, 1)) {
    throw std::runtime_error("checkpoint: trailing bytes in " + path);
  }
  return p;
}

namespace {

std::uint64_t fnv1a_accumulate(std::uint64_t h, const void* data, std::size_t n) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

}  // namespace

std::uint64_t params_checksum(const ModelParams& p) {
  std::uint64_t h = kFnvOffset;
  for_each_param(p, [&](double v) { h = fnv1a_accumulate(h, &v, sizeof v); });
  return h;
}

std::vector<std::uint64_t> group_checksums(const ModelParams& p) {
  std::vector<std::uint64_t> out;
  auto sum_span = [](const std::vector<double>& data) {
    std::uint64_t h = kFnvOffset;
    for (double v : data) h = fnv1a_accumulate(h, &v, sizeof v);
    return h;
  };
  out.push_back(sum_span(p.embeddings.data()));
  for (const LayerParams& l : p.layers) {
    std::uint64_t h = kFnvOffset;
    auto acc = [&h](const std::vector<double>& data) {
      for (double v : data) h = fnv1a_accumulate(h, &v, sizeof v);
    };
    acc(l.w1.data());
    acc(l.b1);
    acc(l.w2.data());
    acc(l.b2);
    acc(l.gain);
    out.push_back(h);
  }
  out.push_back(sum_span(p.head.data()));
  return out;
}

}  // namespace adaptlab
