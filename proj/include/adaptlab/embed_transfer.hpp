#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "adaptlab/numeric.hpp"
#include "adaptlab/rng.hpp"
#include "adaptlab/tokenizer.hpp"

namespace adaptlab {

// Per-token embedding rows (vocab_size x d).
struct EmbeddingMatrix {
  Matrix rows;

  std::size_t vocab_size() const { return rows.rows(); }
  std::size_t dim() const { return rows.cols(); }
};

// Maps every new-vocabulary token onto the old vocabulary: an exact
// surface-string overlap where one exists, plus the old tokenizer's
// decomposition of the new token's surface form. The decomposition
// concatenation always reproduces the token string (byte fallback).
struct VocabAlignment {
  std::vector<std::optional<int>> overlap;      // indexed by new id
  std::vector<std::vector<int>> decomposition;  // indexed by new id

  std::size_t new_vocab_size() const { return overlap.size(); }
};

// Token-string keyed auxiliary vectors used by the Linear and FOCUS
// initializers.
struct AuxEmbedding {
  std::size_t dim = 0;
  std::unordered_map<std::string, Vector> vectors;

  const Vector* find(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

VocabAlignment build_alignment(const TokenizerModel& old_tok, const TokenizerModel& new_tok);

std::vector<std::string> vocab_strings(const TokenizerModel& tok);

// I.i.d. normal(0, scale^2) rows; deterministic per stream.
EmbeddingMatrix init_random(std::size_t new_vocab_size, std::size_t dim, double scale,
                            RngStream& rng);

// Random rows for new tokens only; overlap rows are copied from the old
// matrix unless full_reinit is set.
EmbeddingMatrix init_random_transfer(const EmbeddingMatrix& old, const VocabAlignment& align,
                                     double scale, RngStream& rng, bool full_reinit = false);

// Overlap tokens copy the old row; every other token gets the arithmetic
// mean of its decomposition's old rows.
EmbeddingMatrix init_fvt(const EmbeddingMatrix& old, const VocabAlignment& align,
                         const std::vector<std::string>& new_vocab);

// Fits the affine map aux -> old row over overlap tokens by least squares
// (optional ridge penalty on the linear part only) and applies it to new
// tokens; overlap tokens keep their old rows exactly.
EmbeddingMatrix init_linear(const EmbeddingMatrix& old, const AuxEmbedding& aux,
                            const VocabAlignment& align,
                            const std::vector<std::string>& new_vocab, double ridge = 0.0);

// Each new token takes the sparsemax of its cosine similarities (in aux
// space) to the overlap tokens as combination weights over old rows.
EmbeddingMatrix init_focus(const EmbeddingMatrix& old, const AuxEmbedding& aux,
                           const VocabAlignment& align,
                           const std::vector<std::string>& new_vocab);

// FOCUS combination weights for one new token over the overlap tokens
// (ascending new-id order). Exposed for verification.
Vector focus_weights(const AuxEmbedding& aux, const VocabAlignment& align,
                     const std::vector<std::string>& new_vocab, int new_id);

// Co-occurrence-based auxiliary embedding trainer (positive PMI within a
// token window, rank-d factorization by orthogonal iteration). Plain
// plumbing so the FOCUS/Linear initializers have an auxiliary space to
// work in; covers every vocab string of every given tokenizer.
AuxEmbedding train_aux_embedding(const std::vector<std::string>& corpus,
                                 const std::vector<const TokenizerModel*>& tokenizers,
                                 std::size_t dim, std::size_t window, RngStream& rng);

// File format: text header "adaptlab-emb 1 <vocab_size> <dim>\n" followed by
// raw little-endian 64-bit float rows.
void save_embeddings(const EmbeddingMatrix& emb, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

}  // namespace adaptlab
