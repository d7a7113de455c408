#include "adaptlab/embed_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adaptlab {

std::vector<std::string> vocab_strings(const TokenizerModel& tok) {
  std::vector<std::string> out;
  out.reserve(tok.vocab_size());
  for (std::size_t id = 0; id < tok.vocab_size(); ++id) {
    out.push_back(tok.token_string(static_cast<int>(id)));
  }
  return out;
}

VocabAlignment build_alignment(const TokenizerModel& old_tok, const TokenizerModel& new_tok) {
  VocabAlignment align;
  const std::size_t n = new_tok.vocab_size();
  align.overlap.resize(n);
  align.decomposition.resize(n);
  for (std::size_t id = 0; id < n; ++id) {
    const std::string& surface = new_tok.token_string(static_cast<int>(id));
    if (auto old_id = old_tok.token_id(surface)) {
      align.overlap[id] = *old_id;
      align.decomposition[id] = {*old_id};
    } else {
      // Byte-level fallback guarantees a nonempty decomposition. The merge
      // rules are applied to the raw surface form without pretokenization
      // so the concatenation identity holds for any token string.
      align.decomposition[id] = old_tok.encode_pretoken(surface);
    }
  }
  return align;
}

EmbeddingMatrix init_random(std::size_t new_vocab_size, std::size_t dim, double scale,
                            RngStream& rng) {
  if (scale < 0.0) {
    throw std::invalid_argument("init_random: negative scale");
  }
  EmbeddingMatrix emb;
  emb.rows = Matrix(new_vocab_size, dim);
  for (double& v : emb.rows.data()) v = scale * rng.next_gaussian();
  return emb;
}

EmbeddingMatrix init_random_transfer(const EmbeddingMatrix& old, const VocabAlignment& align,
                                     double scale, RngStream& rng, bool full_reinit) {
  EmbeddingMatrix emb = init_random(align.new_vocab_size(), old.dim(), scale, rng);
  if (!full_reinit) {
    for (std::size_t id = 0; id < align.new_vocab_size(); ++id) {
      if (align.overlap[id]) {
        emb.rows.set_row(id, old.rows.row(static_cast<std::size_t>(*align.overlap[id])));
      }
    }
  }
  return emb;
}

EmbeddingMatrix init_fvt(const EmbeddingMatrix& old, const VocabAlignment& align,
                         const std::vector<std::string>& new_vocab) {
  if (new_vocab.size() != align.new_vocab_size()) {
    throw std::invalid_argument("init_fvt: vocab/alignment size mismatch");
  }
  EmbeddingMatrix emb;
  emb.rows = Matrix(new_vocab.size(), old.dim());
  for (std::size_t id = 0; id < new_vocab.size(); ++id) {
    if (align.overlap[id]) {
      emb.rows.set_row(id, old.rows.row(static_cast<std::size_t>(*align.overlap[id])));
      continue;
    }
    const std::vector<int>& pieces = align.decomposition[id];
    if (pieces.empty()) {
      throw std::invalid_argument("init_fvt: token has no decomposition: " + new_vocab[id]);
    }
    Vector mean(old.dim(), 0.0);
    for (int piece : pieces) {
      const double* row = old.rows.row_ptr(static_cast<std::size_t>(piece));
      for (std::size_t i = 0; i < old.dim(); ++i) mean[i] += row[i];
    }
    for (double& v : mean) v /= static_cast<double>(pieces.size());
    emb.rows.set_row(id, mean);
  }
  return emb;
}

namespace {

// Solves the SPD system G x = b for all columns of rhs in place via
// Cholesky. Throws when a pivot collapses (rank-deficient normal
// equations).
Matrix cholesky_solve(Matrix g, Matrix rhs) {
  const std::size_t n = g.rows();
  // Per-column pivot tolerance relative to the original diagonal, so a
  // huge ridge on other columns cannot mask a genuinely collapsed pivot.
  Vector tol(n);
  for (std::size_t i = 0; i < n; ++i) tol[i] = 1e-12 * g(i, i) + 1e-300;

  // In-place lower Cholesky factor.
  for (std::size_t j = 0; j < n; ++j) {
    double diag = g(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= g(j, k) * g(j, k);
    if (diag <= tol[j]) {
      throw std::runtime_error(
          "init_linear: rank-deficient normal equations; enable ridge regularization "
          "(ridge > 0)");
    }
    g(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = g(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= g(i, k) * g(j, k);
      g(i, j) = v / g(j, j);
    }
  }
  // Forward then backward substitution per column.
  const std::size_t cols = rhs.cols();
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = rhs(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= g(i, k) * rhs(k, c);
      rhs(i, c) = v / g(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = rhs(i, c);
      for (std::size_t k = i + 1; k < n; ++k) v -= g(k, i) * rhs(k, c);
      rhs(i, c) = v / g(i, i);
    }
  }
  return rhs;
}

const Vector& aux_or_throw(const AuxEmbedding& aux, const std::string& token,
                           const char* where) {
  const Vector* v = aux.find(token);
  if (!v) {
    throw std::invalid_argument(std::string(where) + ": aux embedding missing token: " + token);
  }
  return *v;
}

}  // namespace

EmbeddingMatrix init_linear(const EmbeddingMatrix& old, const AuxEmbedding& aux,
                            const VocabAlignment& align,
                            const std::vector<std::string>& new_vocab, double ridge) {
  if (new_vocab.size() != align.new_vocab_size()) {
    throw std::invalid_argument("init_linear: vocab/alignment size mismatch");
  }
  if (ridge < 0.0) {
    throw std::invalid_argument("init_linear: negative ridge");
  }
  std::vector<std::size_t> overlap_ids;
  for (std::size_t id = 0; id < new_vocab.size(); ++id) {
    if (align.overlap[id]) overlap_ids.push_back(id);
  }
  const std::size_t q = aux.dim;
  if (overlap_ids.size() < q + 1) {
    throw std::invalid_argument("init_linear: need at least aux_dim + 1 overlap tokens");
  }

  // Normal equations for the affine fit [aux | 1] * X = old_rows.
  Matrix g(q + 1, q + 1);
  Matrix rhs(q + 1, old.dim());
  for (std::size_t id : overlap_ids) {
    const Vector& a = aux_or_throw(aux, new_vocab[id], "init_linear");
    if (a.size() != q) {
      throw std::invalid_argument("init_linear: aux dim mismatch for token: " + new_vocab[id]);
    }
    const double* ov = old.rows.row_ptr(static_cast<std::size_t>(*align.overlap[id]));
    auto coord = [&](std::size_t i) { return i < q ? a[i] : 1.0; };
    for (std::size_t i = 0; i <= q; ++i) {
      for (std::size_t j = 0; j <= q; ++j) g(i, j) += coord(i) * coord(j);
      for (std::size_t c = 0; c < old.dim(); ++c) rhs(i, c) += coord(i) * ov[c];
    }
  }
  for (std::size_t i = 0; i < q; ++i) g(i, i) += ridge;  // bias row left unpenalized

  Matrix x = cholesky_solve(std::move(g), std::move(rhs));

  EmbeddingMatrix emb;
  emb.rows = Matrix(new_vocab.size(), old.dim());
  for (std::size_t id = 0; id < new_vocab.size(); ++id) {
    if (align.overlap[id]) {
      emb.rows.set_row(id, old.rows.row(static_cast<std::size_t>(*align.overlap[id])));
      continue;
    }
    const Vector& a = aux_or_throw(aux, new_vocab[id], "init_linear");
    for (std::size_t c = 0; c < old.dim(); ++c) {
      double v = x(q, c);
      for (std::size_t i = 0; i < q; ++i) v += a[i] * x(i, c);
      emb.rows(id, c) = v;
    }
  }
  return emb;
}

namespace {

double cosine(const Vector& a, const Vector& b) {
  double na = l2_norm(a);
  double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<std::size_t> overlap_new_ids(const VocabAlignment& align) {
  std::vector<std::size_t> ids;
  for (std::size_t id = 0; id < align.new_vocab_size(); ++id) {
    if (align.overlap[id]) ids.push_back(id);
  }
  return ids;
}

}  // namespace

Vector focus_weights(const AuxEmbedding& aux, const VocabAlignment& align,
                     const std::vector<std::string>& new_vocab, int new_id) {
  std::vector<std::size_t> overlap = overlap_new_ids(align);
  if (overlap.empty()) {
    throw std::invalid_argument("focus_weights: empty overlap");
  }
  const Vector& target = aux_or_throw(aux, new_vocab[static_cast<std::size_t>(new_id)], "init_focus");
  Vector sims(overlap.size());
  for (std::size_t j = 0; j < overlap.size(); ++j) {
    sims[j] = cosine(target, aux_or_throw(aux, new_vocab[overlap[j]], "init_focus"));
  }
  return sparsemax(sims);
}

EmbeddingMatrix init_focus(const EmbeddingMatrix& old, const AuxEmbedding& aux,
                           const VocabAlignment& align,
                           const std::vector<std::string>& new_vocab) {
  if (new_vocab.size() != align.new_vocab_size()) {
    throw std::invalid_argument("init_focus: vocab/alignment size mismatch");
  }
  std::vector<std::size_t> overlap = overlap_new_ids(align);
  if (overlap.empty()) {
    throw std::invalid_argument("init_focus: empty overlap");
  }
  EmbeddingMatrix emb;
  emb.rows = Matrix(new_vocab.size(), old.dim());
  for (std::size_t id = 0; id < new_vocab.size(); ++id) {
    if (align.overlap[id]) {
      emb.rows.set_row(id, old.rows.row(static_cast<std::size_t>(*align.overlap[id])));
      continue;
    }
    Vector w = focus_weights(aux, align, new_vocab, static_cast<int>(id));
    Vector row(old.dim(), 0.0);
    for (std::size_t j = 0; j < overlap.size(); ++j) {
      if (w[j] == 0.0) continue;
      const double* src = old.rows.row_ptr(static_cast<std::size_t>(*align.overlap[overlap[j]]));
      for (std::size_t c = 0; c < old.dim(); ++c) row[c] += w[j] * src[c];
    }
    emb.rows.set_row(id, row);
  }
  return emb;
}

AuxEmbedding train_aux_embedding(const std::vector<std::string>& corpus,
                                 const std::vector<const TokenizerModel*>& tokenizers,
                                 std::size_t dim, std::size_t window, RngStream& rng) {
  if (dim == 0 || window == 0) {
    throw std::invalid_argument("train_aux_embedding: dim and window must be positive");
  }
  // Row universe: every vocab string of every tokenizer. std::map keeps
  // the index assignment deterministic.
  std::map<std::string, std::size_t> index;
  for (const TokenizerModel* tok : tokenizers) {
    for (const std::string& s : vocab_strings(*tok)) index.emplace(s, 0);
  }
  std::size_t next = 0;
  for (auto& [token, idx] : index) idx = next++;
  const std::size_t n = index.size();

  Matrix counts(n, n);
  for (const TokenizerModel* tok : tokenizers) {
    for (const std::string& doc : corpus) {
      std::vector<int> ids = tok->encode(doc);
      std::vector<std::size_t> rows(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i) {
        rows[i] = index.at(tok->token_string(ids[i]));
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t off = 1; off <= window && i + off < rows.size(); ++off) {
          counts(rows[i], rows[i + off]) += 1.0;
          counts(rows[i + off], rows[i]) += 1.0;
        }
      }
    }
  }

  // Positive PMI.
  Vector row_sum(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row_sum[i] += counts(i, j);
    total += row_sum[i];
  }
  Matrix ppmi(n, n);
  if (total > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double c = counts(i, j);
        if (c <= 0.0 || row_sum[i] <= 0.0 || row_sum[j] <= 0.0) continue;
        double pmi = std::log(c * total / (row_sum[i] * row_sum[j]));
        if (pmi > 0.0) ppmi(i, j) = pmi;
      }
    }
  }

  // Orthogonal iteration for the top-dim eigenpairs of the symmetric PPMI.
  const std::size_t d = std::min(dim, n);
  Matrix q(n, d);
  for (double& v : q.data()) v = rng.next_gaussian();
  auto orthonormalize = [&](Matrix& mat) {
    for (std::size_t c = 0; c < mat.cols(); ++c) {
      for (std::size_t p = 0; p < c; ++p) {
        double proj = 0.0;
        for (std::size_t r = 0; r < mat.rows(); ++r) proj += mat(r, c) * mat(r, p);
        for (std::size_t r = 0; r < mat.rows(); ++r) mat(r, c) -= proj * mat(r, p);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < mat.rows(); ++r) norm += mat(r, c) * mat(r, c);
      norm = std::sqrt(norm);
      if (norm < 1e-12) {
        // Degenerate column; reseed deterministically.
        for (std::size_t r = 0; r < mat.rows(); ++r) mat(r, c) = rng.next_gaussian();
        norm = 0.0;
        for (std::size_t r = 0; r < mat.rows(); ++r) norm += mat(r, c) * mat(r, c);
        norm = std::sqrt(norm);
      }
      for (std::size_t r = 0; r < mat.rows(); ++r) mat(r, c) /= norm;
    }
  };
  orthonormalize(q);
  for (int iter = 0; iter < 50; ++iter) {
    Matrix z(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += ppmi(r, k) * q(k, c);
        z(r, c) = acc;
      }
    }
    q = std::move(z);
    orthonormalize(q);
  }
  // Rayleigh quotients as eigenvalue estimates.
  Vector scale_col(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double mq = 0.0;
      for (std::size_t k = 0; k < n; ++k) mq += ppmi(r, k) * q(k, c);
      acc += q(r, c) * mq;
    }
    scale_col[c] = std::sqrt(std::abs(acc));
  }

  AuxEmbedding aux;
  aux.dim = dim;
  for (const auto& [token, idx] : index) {
    Vector v(dim, 0.0);
    for (std::size_t c = 0; c < d; ++c) v[c] = q(idx, c) * scale_col[c];
    aux.vectors.emplace(token, std::move(v));
  }
  return aux;
}

void save_embeddings(const EmbeddingMatrix& emb, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("embeddings: cannot open " + path + " for writing");
  out << "adaptlab-emb 1 " << emb.vocab_size() << ' ' << emb.dim() << '\n';
  out.write(reinterpret_cast<const char*>(emb.rows.data().data()),
            static_cast<std::streamsize>(emb.rows.size() * sizeof(double)));
  if (!out) throw std::runtime_error("embeddings: write failed for " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("embeddings: cannot open " + path);
  std::string magic;
  int version = 0;
  std::size_t vocab = 0, dim = 0;
  in >> magic >> version >> vocab >> dim;
  if (magic != "adaptlab-emb" || version != 1) {
    throw std::runtime_error("embeddings: bad header in " + path);
  }
  in.ignore(1, '\n');
  EmbeddingMatrix emb;
  emb.rows = Matrix(vocab, dim);
  if (!in.read(reinterpret_cast<char*>(emb.rows.data().data()),
               static_cast<std::streamsize>(emb.rows.size() * sizeof(double)))) {
    throw std::runtime_error("embeddings: truncated data in " + path);
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw std::runtime_error("embeddings: trailing bytes in " + path);
  }
  return emb;
}

}  // namespace adaptlab
