#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaptlab/numeric.hpp"
#include "adaptlab/rng.hpp"

namespace adaptlab {

// Token id 0 is reserved as the packing separator.
constexpr int kSeparatorToken = 0;
constexpr double kRmsNormEps = 1e-6;

struct LayerParams {
  Matrix w1;    // dim x 2*hidden, gate half then value half
  Vector b1;    // 2*hidden
  Matrix w2;    // hidden x dim
  Vector b2;    // dim
  Vector gain;  // dim (pre-norm rmsnorm gain)
};

// Tiny causal LM. Per layer, the block input at position t is the running
// mean of the previous hidden states over positions <= t (causal mixing),
// rms-normalized, passed through a SwiGLU MLP, and added back as a
// residual. Output head is an untied dim x vocab projection.
struct ModelParams {
  std::size_t vocab = 0;
  std::size_t dim = 0;
  std::size_t hidden = 0;
  Matrix embeddings;  // vocab x dim
  std::vector<LayerParams> layers;
  Matrix head;  // dim x vocab

  std::size_t depth() const { return layers.size(); }
  std::size_t parameter_count() const;
};

ModelParams init_model(std::size_t vocab, std::size_t dim, std::size_t hidden,
                       std::size_t depth, double scale, RngStream& rng);

// Same-shape zero container for gradient accumulation.
ModelParams zeros_like(const ModelParams& p);

bool same_shape(const ModelParams& a, const ModelParams& b);
bool params_equal(const ModelParams& a, const ModelParams& b);

// Visits every parameter in the declared serialization order:
// embeddings, then per layer (w1, b1, w2, b2, gain), then head.
template <typename F>
void for_each_param(ModelParams& p, F&& f) {
  for (double& v : p.embeddings.data()) f(v);
  for (LayerParams& l : p.layers) {
    for (double& v : l.w1.data()) f(v);
    for (double& v : l.b1) f(v);
    for (double& v : l.w2.data()) f(v);
    for (double& v : l.b2) f(v);
    for (double& v : l.gain) f(v);
  }
  for (double& v : p.head.data()) f(v);
}

template <typename F>
void for_each_param(const ModelParams& p, F&& f) {
  for (double v : p.embeddings.data()) f(v);
  for (const LayerParams& l : p.layers) {
    for (double v : l.w1.data()) f(v);
    for (double v : l.b1) f(v);
    for (double v : l.w2.data()) f(v);
    for (double v : l.b2) f(v);
    for (double v : l.gain) f(v);
  }
  for (double v : p.head.data()) f(v);
}

struct ForwardTrace {
  struct LayerTrace {
    std::vector<Vector> mean;    // running prefix mean
    std::vector<double> rms;     // rmsnorm denominators
    std::vector<Vector> normed;  // rmsnorm output
    std::vector<Vector> preact;  // w1 output + b1 (gate | value)
    std::vector<Vector> gated;   // swiglu output
  };
  std::vector<int> tokens;
  std::vector<LayerTrace> layers;
  std::vector<Vector> final_hidden;
  std::vector<Vector> logprobs;  // per position, length vocab
};

// Full forward pass with intermediates kept for backward.
// Throws if any token id is out of range.
ForwardTrace forward(const ModelParams& p, const std::vector<int>& tokens);

// Per-position log-probability vectors only.
std::vector<Vector> forward_logprobs(const ModelParams& p, const std::vector<int>& tokens);

// Accumulates d(loss)/d(params) into grads given d(loss)/d(logits) per
// position. dlogits must match the trace length and vocab size.
void backward(const ModelParams& p, const ForwardTrace& trace,
              const std::vector<Vector>& dlogits, ModelParams& grads);

// Sum of next-token log-probs of response conditioned on prompt + prefix.
// The prompt must be nonempty so every response token has a context.
double seq_logprob(const ModelParams& p, const std::vector<int>& prompt,
                   const std::vector<int>& response);

// Adds coeff * d(seq_logprob)/d(params) into grads; returns the log-prob.
double seq_logprob_backward(const ModelParams& p, const std::vector<int>& prompt,
                            const std::vector<int>& response, double coeff,
                            ModelParams& grads);

struct MaskedSequence {
  std::vector<int> tokens;
  std::vector<bool> loss_mask;  // same length; true = token's NLL counts
};

struct Batch {
  std::vector<MaskedSequence> sequences;
};

struct LossResult {
  double loss = 0.0;
  long long unmasked_tokens = 0;
};

// Mean negative log-likelihood over unmasked positions. A token at
// position t contributes -logprob[t-1][token] when its mask bit is set;
// position 0 never contributes (no left context). All positions masked
// yields loss 0.
LossResult masked_nll(const ModelParams& p, const Batch& batch);
LossResult masked_nll_backward(const ModelParams& p, const Batch& batch, ModelParams& grads);

// Autoregressively samples `length` tokens after prompt from the model's
// softmax distribution. Deterministic given the stream.
std::vector<int> sample_response(const ModelParams& p, const std::vector<int>& prompt,
                                 std::size_t length, RngStream& rng);

// Trainability flags per parameter group.
struct FreezeMask {
  bool embeddings = true;
  std::vector<bool> layers;
  bool head = true;

  static FreezeMask all_trainable(std::size_t depth);
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

struct AdamWState {
  AdamWConfig cfg;
  long long step = 0;
  ModelParams m;
  ModelParams v;
};

AdamWState init_adamw(const ModelParams& params, const AdamWConfig& cfg);

// Decoupled-weight-decay Adam update with bias-corrected moments. Groups
// whose mask flag is false are left bit-identical (moments included).
void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state, double lr,
                const FreezeMask* mask = nullptr);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_grad_norm(ModelParams& grads, double max_norm);

// Greedy in-order packing of samples into sequences of at most max_len
// tokens, separated by kSeparatorToken (mask off). Oversized or empty
// samples are errors.
std::vector<MaskedSequence> pack_samples(const std::vector<MaskedSequence>& samples,
                                         std::size_t max_len);

// Checkpoint file: text header "adaptlab-ckpt 1 <V> <d> <f> <L>\n" followed
// by raw little-endian 64-bit floats in the for_each_param order.
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

std::uint64_t params_checksum(const ModelParams& p);
// Checksums per parameter group: embeddings, each layer, head.
std::vector<std::uint64_t> group_checksums(const ModelParams& p);

}  // namespace adaptlab
