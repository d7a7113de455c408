#include <doctest.h>
#include <stdexcept>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "adaptlab/rng.hpp"
#include "adaptlab/tokenizer.hpp"

using namespace adaptlab;

namespace {

// Independent BPE oracle: recounts adjacent pair frequencies from scratch
// at every step, working on token strings rather than ids, and returns the
// ordered list of merged strings.
std::vector<std::string> bpe_merge_oracle(const std::vector<std::string>& corpus,
                                          std::size_t merges, const PretokenizerFlags& flags) {
  std::map<std::vector<std::string>, long long> pieces;
  for (const std::string& doc : corpus) {
    for (std::string_view pre : pretokenize(doc, flags)) {
      std::vector<std::string> toks;
      for (char c : pre) toks.emplace_back(1, c);
      pieces[toks] += 1;
    }
  }
  std::vector<std::string> merged;
  for (std::size_t step = 0; step < merges; ++step) {
    std::map<std::pair<std::string, std::string>, long long> counts;
    for (const auto& [toks, count] : pieces) {
      for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        counts[{toks[i], toks[i + 1]}] += count;
      }
    }
    REQUIRE(!counts.empty());
    std::pair<std::string, std::string> best;
    long long best_count = -1;
    for (const auto& [pair, count] : counts) {
      if (count > best_count) {
        best = pair;
        best_count = count;
      }
    }
    merged.push_back(best.first + best.second);
    std::map<std::vector<std::string>, long long> next;
    for (const auto& [toks, count] : pieces) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < toks.size();) {
        if (i + 1 < toks.size() && toks[i] == best.first && toks[i + 1] == best.second) {
          out.push_back(toks[i] + toks[i + 1]);
          i += 2;
        } else {
          out.push_back(toks[i]);
          ++i;
        }
      }
      next[out] += count;
    }
    pieces = std::move(next);
  }
  return merged;
}

std::string random_unicode_text(RngStream& rng, std::size_t max_len) {
  static const char* kMultibyte[] = {"ą", "ć", "ę", "ł", "ń", "ó", "ś", "ż",
                                     "©", "π", "→", "漢", "字", "🙂", "𝜋", " "};
  std::string s;
  std::size_t len = rng.next_u64() % (max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    switch (rng.next_u64() % 5) {
      case 0: s += static_cast<char>('a' + rng.next_u64() % 26); break;
      case 1: s += static_cast<char>(' ' + rng.next_u64() % 95); break;
      case 2: s += kMultibyte[rng.next_u64() % 16]; break;
      case 3: s += static_cast<char>('0' + rng.next_u64() % 10); break;
      default: s += static_cast<char>(rng.next_u64() % 256); break;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("train_bpe learns the only candidate merge first") {
  TokenizerModel model = train_bpe({"aaaa"}, TokenizerModel::kByteAlphabet + 1, {});
  REQUIRE(model.merges().size() == 1);
  CHECK(model.token_string(model.merges()[0].result) == "aa");
  CHECK(model.merges()[0].left == 'a');
  CHECK(model.merges()[0].right == 'a');
}

TEST_CASE("train_bpe agrees with the recounting oracle") {
  std::vector<std::string> corpus = {"abab abab", "low lower lowest", "aa bb aa"};
  const std::size_t merges = 6;
  TokenizerModel model = train_bpe(corpus, TokenizerModel::kByteAlphabet + merges, {});
  std::vector<std::string> oracle = bpe_merge_oracle(corpus, merges, {});
  REQUIRE(model.merges().size() == merges);
  for (std::size_t i = 0; i < merges; ++i) {
    CHECK(model.token_string(model.merges()[i].result) == oracle[i]);
  }
}

TEST_CASE("train_bpe tie-break learns ab then abab") {
  TokenizerModel model = train_bpe({"abab abab"}, TokenizerModel::kByteAlphabet + 2, {});
  REQUIRE(model.merges().size() == 2);
  CHECK(model.token_string(model.merges()[0].result) == "ab");
  CHECK(model.token_string(model.merges()[1].result) == "abab");
}

TEST_CASE("train_bpe determinism") {
  std::vector<std::string> corpus = {"to be or not to be", "be or to"};
  TokenizerModel a = train_bpe(corpus, 260, {});
  TokenizerModel b = train_bpe(corpus, 260, {});
  CHECK(a.serialize() == b.serialize());
}

TEST_CASE("isolate_digits keeps merges from crossing digit boundaries") {
  // With digits isolated, "a1a1" has no adjacent pair at all.
  CHECK_THROWS_AS(train_bpe({"a1a1"}, TokenizerModel::kByteAlphabet + 1, {true, false}),
                  std::runtime_error);
  TokenizerModel model = train_bpe({"aa1aa1"}, TokenizerModel::kByteAlphabet + 1, {true, false});
  REQUIRE(model.merges().size() == 1);
  CHECK(model.token_string(model.merges()[0].result) == "aa");
  std::vector<int> ids = model.encode("aa1aa1");
  CHECK(ids.size() == 4);  // [aa, 1, aa, 1]
  for (int id : ids) {
    const std::string& tok = model.token_string(id);
    bool has_digit = tok.find('1') != std::string::npos;
    CHECK((tok == "1") == has_digit);
  }
}

TEST_CASE("isolate_punctuation splits punctuation into single pretokens") {
  PretokenizerFlags flags{false, true};
  auto pieces = pretokenize("ab,cd!", flags);
  REQUIRE(pieces.size() == 4);
  CHECK(pieces[0] == "ab");
  CHECK(pieces[1] == ",");
  CHECK(pieces[2] == "cd");
  CHECK(pieces[3] == "!");
}

TEST_CASE("target vocab below alphabet size is an error") {
  CHECK_THROWS_AS(train_bpe({"abc"}, 255, {}), std::invalid_argument);
}

TEST_CASE("encode basics") {
  TokenizerModel model;
  CHECK(model.encode("").empty());
  model.add_merge('a', 'b');
  CHECK(model.encode("abab").size() == 2);
  CHECK(model.decode(model.encode("abab")) == "abab");
}

TEST_CASE("decode-encode identity on random unicode strings") {
  RngStream rng(11, 2);
  std::vector<std::string> corpus = {"kot ma ale", "ala ma kota 123", "zażółć gęślą jaźń"};
  TokenizerModel model = train_bpe(corpus, 275, {true, true});
  for (int rep = 0; rep < 1000; ++rep) {
    std::string text = random_unicode_text(rng, 60);
    CHECK(model.decode(model.encode(text)) == text);
  }
}

TEST_CASE("token count never increases when merges are extended") {
  std::vector<std::string> corpus = {"mama ma mamba", "mam mam mama", "abba baba"};
  std::string probe = "mama mamba abba mam";
  std::vector<std::size_t> counts;
  for (std::size_t extra : {0, 2, 8, 4, 6}) {
    TokenizerModel model = train_bpe(corpus, TokenizerModel::kByteAlphabet + extra, {});
    counts.push_back(model.encode(probe).size());
  }
  CHECK(counts[1] <= counts[0]);
  CHECK(counts[2] <= counts[1]);
  // non-monotone target order still compares against the smaller model
  CHECK(counts[3] <= counts[1]);
  CHECK(counts[2] <= counts[4]);
  CHECK(counts[4] <= counts[3]);
}

TEST_CASE("efficiency metrics hand-counted example") {
  TokenizerModel byte_model;
  TokenizerModel ab_model;
  ab_model.add_merge('a', 'b');
  EfficiencyReport r = efficiency_metrics(ab_model, "ab ab");
  CHECK(r.token_count == 3);  // [ab, " ", ab]
  CHECK(r.char_count == 5);
  CHECK(r.word_count == 2);
  CHECK(r.cpt() == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(r.tpw() == doctest::Approx(1.5).epsilon(1e-15));

  EfficiencyReport b = efficiency_metrics(byte_model, "ab ab");
  CHECK(b.token_count == 5);
  CHECK(b.cpt() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("single token covering the whole text") {
  TokenizerModel model;
  int ab = model.add_merge('a', 'b');
  model.add_merge(ab, 'c');
  EfficiencyReport r = efficiency_metrics(model, "abc");
  CHECK(r.token_count == 1);
  CHECK(r.char_count == 3);
  CHECK(r.word_count == 1);
  CHECK(r.cpt() == 3.0);
  CHECK(r.tpw() == 1.0);
}

TEST_CASE("efficiency metrics reject empty text") {
  TokenizerModel model;
  CHECK_THROWS_AS(efficiency_metrics(model, ""), std::invalid_argument);
}

TEST_CASE("nfc counting merges combining sequences") {
  // "e" + combining acute composes to a single scalar under NFC.
  CHECK(nfc_char_count("é") == 1);
  CHECK(nfc_char_count("é") == 1);
  CHECK(nfc_char_count("abc") == 3);
  // lone invalid byte still counts as one scalar
  CHECK(nfc_char_count(std::string_view("\xff", 1)) == 1);
}

TEST_CASE("published tokenizer row is arithmetically consistent") {
  // 375 tokens at CpT 4.78 (rounded to 2 decimals) implies a character
  // count of 1792 or 1793.
  for (long long chars : {1792, 1793}) {
    EfficiencyReport r;
    r.token_count = 375;
    r.char_count = chars;
    r.word_count = 231;
    CHECK(std::abs(r.cpt() - 4.78) <= 0.005);
    CHECK(std::abs(r.tpw() - 1.62) <= 0.005);
  }
}

TEST_CASE("compare_tokenizers keeps input order and matches single metrics") {
  TokenizerModel byte_model;
  TokenizerModel ab_model;
  ab_model.add_merge('a', 'b');
  std::string text = "ab ab cd";
  auto rows = compare_tokenizers({ab_model, byte_model, ab_model}, text);
  REQUIRE(rows.size() == 3);
  EfficiencyReport single = efficiency_metrics(ab_model, text);
  CHECK(rows[0].token_count == single.token_count);
  CHECK(rows[2].token_count == single.token_count);
  CHECK(rows[1].token_count == efficiency_metrics(byte_model, text).token_count);
  CHECK(rows[0].char_count == rows[1].char_count);
  CHECK_THROWS_AS(compare_tokenizers({}, text), std::invalid_argument);
}

TEST_CASE("serialization round-trips bit-exactly") {
  std::vector<std::string> corpus = {"tab\tand\\slash", "newline\ntext", "zażółć 123!?"};
  TokenizerModel model = train_bpe(corpus, 276, {true, true});
  std::string blob = model.serialize();
  TokenizerModel back = TokenizerModel::deserialize(blob);
  CHECK(back.serialize() == blob);
  CHECK(back.vocab_size() == model.vocab_size());
  std::string probe = "za\tżółć\\ 12!";
  CHECK(back.encode(probe) == model.encode(probe));
}

TEST_CASE("deserialize rejects malformed data") {
  CHECK_THROWS_AS(TokenizerModel::deserialize("bogus 1 256 0 0\n"), std::runtime_error);
  TokenizerModel model;
  model.add_merge('a', 'b');
  std::string blob = model.serialize();
  CHECK_THROWS_AS(TokenizerModel::deserialize(blob.substr(0, blob.size() / 2)),
                  std::runtime_error);
}
