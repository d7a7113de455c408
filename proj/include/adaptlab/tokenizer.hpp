#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace adaptlab {

struct PretokenizerFlags {
  bool isolate_digits = false;
  bool isolate_punctuation = false;

  bool operator==(const PretokenizerFlags&) const = default;
};

// Byte-level BPE model. Ids 0..255 are the single-byte base alphabet, so
// encoding is total and decode(encode(x)) == x for arbitrary byte strings.
// Merge rules never cross pretoken boundaries (whitespace runs are their
// own pretokens; digit/punctuation isolation is controlled by flags).
class TokenizerModel {
 public:
  static constexpr std::size_t kByteAlphabet = 256;

  struct MergeRule {
    int left = 0;
    int right = 0;
    int result = 0;
  };

  TokenizerModel();

  std::size_t vocab_size() const { return id_to_token_.size(); }
  const std::string& token_string(int id) const;
  std::optional<int> token_id(std::string_view token) const;
  const std::vector<MergeRule>& merges() const { return merges_; }
  const PretokenizerFlags& flags() const { return flags_; }
  void set_flags(PretokenizerFlags flags) { flags_ = flags; }

  // Registers token as the next dense id and records the merge that forms it.
  int add_merge(int left, int right);

  std::vector<int> encode(std::string_view text) const;
  std::string decode(const std::vector<int>& ids) const;

  // Applies the merge rules to a single pretoken given as raw bytes.
  std::vector<int> encode_pretoken(std::string_view pretoken) const;

  std::string serialize() const;
  static TokenizerModel deserialize(std::string_view data);
  void save(const std::string& path) const;
  static TokenizerModel load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<MergeRule> merges_;
  PretokenizerFlags flags_;
};

// Splits text into pretokens: maximal whitespace runs and maximal
// non-whitespace runs, with single ASCII digits / punctuation marks split
// out when the corresponding flag is set. Concatenating the pieces
// reproduces the input exactly.
std::vector<std::string_view> pretokenize(std::string_view text, const PretokenizerFlags& flags);

// Trains a byte-level BPE tokenizer. Pair frequencies are recounted after
// every merge; ties are broken by the lexicographically smallest
// (left string, right string) pair, which makes training deterministic.
TokenizerModel train_bpe(const std::vector<std::string>& corpus, std::size_t target_vocab,
                         const PretokenizerFlags& flags);

struct EfficiencyReport {
  long long token_count = 0;
  long long char_count = 0;  // Unicode scalar values after NFC normalization
  long long word_count = 0;  // maximal non-whitespace runs

  double cpt() const { return static_cast<double>(char_count) / static_cast<double>(token_count); }
  double tpw() const { return static_cast<double>(token_count) / static_cast<double>(word_count); }
};

EfficiencyReport efficiency_metrics(const TokenizerModel& model, std::string_view text);

// One report per model, all computed on the same text. Rows keep input order.
std::vector<EfficiencyReport> compare_tokenizers(const std::vector<TokenizerModel>& models,
                                                 std::string_view text);

// Number of Unicode scalar values in the NFC normalization of text
// (invalid UTF-8 bytes count as one scalar each).
long long nfc_char_count(std::string_view text);

}  // namespace adaptlab
