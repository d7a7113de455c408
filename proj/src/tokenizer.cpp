#include "adaptlab/tokenizer.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adaptlab {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_ascii_punct(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

std::string escape_token(const std::string& token) {
  std::string out;
  out.reserve(token.size());
  char buf[8];
  for (unsigned char c : token) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c >= 0x7f) {
          std::snprintf(buf, sizeof buf, "\\x%02x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out;
}

std::string unescape_token(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 >= s.size()) throw std::runtime_error("tokenizer: dangling escape");
    char c = s[++i];
    switch (c) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 'x': {
        if (i + 2 >= s.size()) throw std::runtime_error("tokenizer: truncated \\x escape");
        auto hex = [](char h) -> int {
          if (h >= '0' && h <= '9') return h - '0';
          if (h >= 'a' && h <= 'f') return h - 'a' + 10;
          if (h >= 'A' && h <= 'F') return h - 'A' + 10;
          throw std::runtime_error("tokenizer: bad hex digit in escape");
        };
        out += static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2]));
        i += 2;
        break;
      }
      default: throw std::runtime_error("tokenizer: unknown escape");
    }
  }
  return out;
}

}  // namespace

TokenizerModel::TokenizerModel() {
  id_to_token_.reserve(kByteAlphabet);
  for (std::size_t b = 0; b < kByteAlphabet; ++b) {
    std::string t(1, static_cast<char>(static_cast<unsigned char>(b)));
    token_to_id_.emplace(t, static_cast<int>(b));
    id_to_token_.push_back(std::move(t));
  }
}

const std::string& TokenizerModel::token_string(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::invalid_argument("tokenizer: token id out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::optional<int> TokenizerModel::token_id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

int TokenizerModel::add_merge(int left, int right) {
  const std::string merged = token_string(left) + token_string(right);
  if (token_to_id_.count(merged)) {
    throw std::invalid_argument("tokenizer: merge result already in vocab: " + escape_token(merged));
  }
  int id = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(merged);
  token_to_id_.emplace(merged, id);
  merges_.push_back({left, right, id});
  return id;
}

std::vector<std::string_view> pretokenize(std::string_view text, const PretokenizerFlags& flags) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t start = i;
    if (is_ascii_space(c)) {
      while (i < text.size() && is_ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    } else if (flags.isolate_digits && is_ascii_digit(c)) {
      ++i;
    } else if (flags.isolate_punctuation && is_ascii_punct(c)) {
      ++i;
    } else {
      while (i < text.size()) {
        unsigned char d = static_cast<unsigned char>(text[i]);
        if (is_ascii_space(d)) break;
        if (flags.isolate_digits && is_ascii_digit(d)) break;
        if (flags.isolate_punctuation && is_ascii_punct(d)) break;
        ++i;
      }
    }
    out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<int> TokenizerModel::encode_pretoken(std::string_view pretoken) const {
  std::vector<int> toks;
  toks.reserve(pretoken.size());
  for (unsigned char c : pretoken) toks.push_back(static_cast<int>(c));
  for (const MergeRule& rule : merges_) {
    if (toks.size() < 2) break;
    std::size_t w = 0;
    for (std::size_t r = 0; r < toks.size();) {
      if (r + 1 < toks.size() && toks[r] == rule.left && toks[r + 1] == rule.right) {
        toks[w++] = rule.result;
        r += 2;
      } else {
        toks[w++] = toks[r++];
      }
    }
    toks.resize(w);
  }
  return toks;
}

std::vector<int> TokenizerModel::encode(std::string_view text) const {
  std::vector<int> out;
  for (std::string_view piece : pretokenize(text, flags_)) {
    std::vector<int> toks = encode_pretoken(piece);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

std::string TokenizerModel::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) out += token_string(id);
  return out;
}

TokenizerModel train_bpe(const std::vector<std::string>& corpus, std::size_t target_vocab,
                         const PretokenizerFlags& flags) {
  if (target_vocab < TokenizerModel::kByteAlphabet) {
    throw std::invalid_argument("train_bpe: target_vocab below base alphabet size");
  }
  TokenizerModel model;
  model.set_flags(flags);

  // Unique pretokens with multiplicities; std::map keeps iteration
  // deterministic across runs.
  std::map<std::string, long long> pretoken_counts;
  for (const std::string& doc : corpus) {
    for (std::string_view piece : pretokenize(doc, flags)) {
      pretoken_counts[std::string(piece)] += 1;
    }
  }
  struct Work {
    std::vector<int> toks;
    long long count;
  };
  std::vector<Work> work;
  work.reserve(pretoken_counts.size());
  for (const auto& [piece, count] : pretoken_counts) {
    std::vector<int> toks;
    toks.reserve(piece.size());
    for (unsigned char c : piece) toks.push_back(static_cast<int>(c));
    work.push_back({std::move(toks), count});
  }

  while (model.vocab_size() < target_vocab) {
    // Recount adjacent pairs from scratch.
    std::map<std::pair<int, int>, long long> pair_counts;
    for (const Work& w : work) {
      for (std::size_t i = 0; i + 1 < w.toks.size(); ++i) {
        pair_counts[{w.toks[i], w.toks[i + 1]}] += w.count;
      }
    }
    if (pair_counts.empty()) {
      throw std::runtime_error("train_bpe: corpus exhausted before reaching target vocab");
    }
    bool have_best = false;
    std::pair<int, int> best{};
    long long best_count = 0;
    for (const auto& [p, count] : pair_counts) {
      if (!have_best || count > best_count) {
        have_best = true;
        best = p;
        best_count = count;
        continue;
      }
      if (count == best_count) {
        auto key = std::make_pair(model.token_string(p.first), model.token_string(p.second));
        auto best_key =
            std::make_pair(model.token_string(best.first), model.token_string(best.second));
        if (key < best_key) best = p;
      }
    }
    int merged_id = model.add_merge(best.first, best.second);
    for (Work& w : work) {
      if (w.toks.size() < 2) continue;
      std::size_t out = 0;
      for (std::size_t r = 0; r < w.toks.size();) {
        if (r + 1 < w.toks.size() && w.toks[r] == best.first && w.toks[r + 1] == best.second) {
          w.toks[out++] = merged_id;
          r += 2;
        } else {
          w.toks[out++] = w.toks[r++];
        }
      }
      w.toks.resize(out);
    }
  }
  return model;
}

long long nfc_char_count(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("nfc_char_count: ICU NFC instance unavailable");
  }
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(input, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("nfc_char_count: normalization failed");
  }
  return normalized.countChar32();
}

EfficiencyReport efficiency_metrics(const TokenizerModel& model, std::string_view text) {
  if (text.empty()) {
    throw std::invalid_argument("efficiency_metrics: empty text");
  }
  EfficiencyReport report;
  report.token_count = static_cast<long long>(model.encode(text).size());
  report.char_count = nfc_char_count(text);
  long long words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (is_ascii_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  report.word_count = words;
  return report;
}

std::vector<EfficiencyReport> compare_tokenizers(const std::vector<TokenizerModel>& models,
                                                 std::string_view text) {
  if (models.empty()) {
    throw std::invalid_argument("compare_tokenizers: need at least one model");
  }
  std::vector<EfficiencyReport> rows;
  rows.reserve(models.size());
  for (const TokenizerModel& m : models) rows.push_back(efficiency_metrics(m, text));
  return rows;
}

std::string TokenizerModel::serialize() const {
  std::ostringstream out;
  out << "adaptlab-bpe 1 " << vocab_size() << ' ' << (flags_.isolate_digits ? 1 : 0) << ' '
      << (flags_.isolate_punctuation ? 1 : 0) << '\n';
  for (std::size_t id = 0; id < id_to_token_.size(); ++id) {
    out << id << '\t' << escape_token(id_to_token_[id]) << '\n';
  }
  out << "merges " << merges_.size() << '\n';
  for (const MergeRule& m : merges_) {
    out << m.left << ' ' << m.right << '\n';
  }
  return out.str();
}

TokenizerModel TokenizerModel::deserialize(std::string_view data) {
  std::istringstream in{std::string(data)};
  std::string magic;
  int version = 0;
  std::size_t vocab = 0;
  int digits = 0, punct = 0;
  in >> magic >> version >> vocab >> digits >> punct;
  if (magic != "adaptlab-bpe" || version != 1) {
    throw std::runtime_error("tokenizer: bad header");
  }
  if (vocab < kByteAlphabet) {
    throw std::runtime_error("tokenizer: vocab smaller than byte alphabet");
  }
  in.ignore(1, '\n');

  std::string line;
  std::vector<std::string> tokens;
  tokens.reserve(vocab);
  for (std::size_t i = 0; i < vocab; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("tokenizer: truncated vocab");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("tokenizer: malformed vocab line");
    if (std::stoull(line.substr(0, tab)) != i) {
      throw std::runtime_error("tokenizer: vocab ids must be dense and ascending");
    }
    tokens.push_back(unescape_token(std::string_view(line).substr(tab + 1)));
  }
  if (!std::getline(in, line)) throw std::runtime_error("tokenizer: missing merges header");
  std::istringstream mh(line);
  std::string tag;
  std::size_t merge_count = 0;
  mh >> tag >> merge_count;
  if (tag != "merges") throw std::runtime_error("tokenizer: missing merges header");
  if (merge_count != vocab - kByteAlphabet) {
    throw std::runtime_error("tokenizer: merge count does not match vocab size");
  }

  TokenizerModel model;
  model.flags_.isolate_digits = digits != 0;
  model.flags_.isolate_punctuation = punct != 0;
  for (std::size_t i = 0; i < kByteAlphabet; ++i) {
    if (tokens[i] != model.id_to_token_[i]) {
      throw std::runtime_error("tokenizer: byte alphabet mismatch");
    }
  }
  for (std::size_t i = 0; i < merge_count; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("tokenizer: truncated merges");
    std::istringstream ml(line);
    int left = -1, right = -1;
    ml >> left >> right;
    int id = model.add_merge(left, right);
    if (model.id_to_token_[static_cast<std::size_t>(id)] != tokens[static_cast<std::size_t>(id)]) {
      throw std::runtime_error("tokenizer: merge result disagrees with vocab entry");
    }
  }
  return model;
}

void TokenizerModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("tokenizer: cannot open " + path + " for writing");
  out << serialize();
}

TokenizerModel TokenizerModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("tokenizer: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace adaptlab
