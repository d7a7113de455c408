#include "adaptlab/data.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adaptlab/grpo.hpp"

namespace adaptlab {

namespace {

void write_ids(std::ostream& out, const std::vector<int>& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ' ';
    out << ids[i];
  }
}

std::vector<int> parse_ids(const std::string& field, const std::string& what,
                           std::size_t line_no) {
  std::vector<int> out;
  std::istringstream in(field);
  long long v = 0;
  while (in >> v) out.push_back(static_cast<int>(v));
  if (!in.eof()) {
    throw std::runtime_error(what + ": bad token id on line " + std::to_string(line_no));
  }
  return out;
}

std::pair<std::string, std::string> split_tab(const std::string& line, const std::string& what,
                                              std::size_t line_no) {
  auto tab = line.find('\t');
  if (tab == std::string::npos) {
    throw std::runtime_error(what + ": expected 2 tab-separated fields on line " +
                             std::to_string(line_no));
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

}  // namespace

void save_sft_dataset(const std::vector<MaskedSequence>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("sft dataset: cannot open " + path + " for writing");
  for (const MaskedSequence& s : samples) {
    write_ids(out, s.tokens);
    out << '\t';
    for (std::size_t i = 0; i < s.loss_mask.size(); ++i) {
      if (i) out << ' ';
      out << (s.loss_mask[i] ? 1 : 0);
    }
    out << '\n';
  }
}

std::vector<MaskedSequence> load_sft_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sft dataset: cannot open " + path);
  std::vector<MaskedSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto [tok_field, mask_field] = split_tab(line, "sft dataset", line_no);
    MaskedSequence s;
    s.tokens = parse_ids(tok_field, "sft dataset", line_no);
    std::vector<int> bits = parse_ids(mask_field, "sft dataset", line_no);
    if (bits.size() != s.tokens.size()) {
      throw std::runtime_error("sft dataset: mask length mismatch on line " +
                               std::to_string(line_no));
    }
    s.loss_mask.reserve(bits.size());
    for (int b : bits) {
      if (b != 0 && b != 1) {
        throw std::runtime_error("sft dataset: mask bits must be 0 or 1 on line " +
                                 std::to_string(line_no));
      }
      s.loss_mask.push_back(b == 1);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_task_file(const std::vector<TaskRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("task file: cannot open " + path + " for writing");
  for (const TaskRecord& r : records) {
    write_ids(out, r.prompt);
    out << '\t';
    write_ids(out, r.answer);
    out << '\n';
  }
}

std::vector<TaskRecord> load_task_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("task file: cannot open " + path);
  std::vector<TaskRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto [prompt_field, answer_field] = split_tab(line, "task file", line_no);
    TaskRecord r;
    r.prompt = parse_ids(prompt_field, "task file", line_no);
    r.answer = parse_ids(answer_field, "task file", line_no);
    if (r.prompt.empty()) {
      throw std::runtime_error("task file: empty prompt on line " + std::to_string(line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MaskedSequence> synthetic_sft_corpus(std::size_t count, RngStream& rng) {
  std::vector<MaskedSequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    int content = arith::kDigitBase + static_cast<int>(rng.next_u64() % 10);
    int noise = 1 + static_cast<int>(rng.next_u64() % 12);
    MaskedSequence s;
    s.tokens = {content, noise};
    s.loss_mask = {false, false};
    for (int j = 0; j < 8; ++j) {
      s.tokens.push_back(content);
      s.loss_mask.push_back(true);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaskRecord> arithmetic_task_records() {
  std::vector<TaskRecord> out;
  out.reserve(100);
  for (int a = 0; a <= 9; ++a) {
    for (int b = 0; b <= 9; ++b) {
      out.push_back({arith::make_prompt(a, b), arith::sum_tokens(a, b)});
    }
  }
  return out;
}

std::vector<PreferenceExample> synthetic_pref_dataset(std::size_t count, std::size_t vocab,
                                                      RngStream& rng) {
  if (vocab < 3) {
    throw std::invalid_argument("synthetic_pref_dataset: vocab too small");
  }
  std::vector<PreferenceExample> out;
  out.reserve(count);
  auto tok = [&]() { return 1 + static_cast<int>(rng.next_u64() % (vocab - 1)); };
  for (std::size_t i = 0; i < count; ++i) {
    PreferenceExample ex;
    ex.prompt = {tok(), tok()};
    ex.chosen = {tok(), tok()};
    do {
      ex.rejected = {tok(), tok()};
    } while (ex.rejected == ex.chosen);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::string> synthetic_text_corpus(std::size_t docs, RngStream& rng) {
  static const char* kLexicon[] = {"ala",  "ma",    "kota",  "kot",  "lubi", "mleko",
                                   "pies", "szuka", "kosci", "dom",  "w",    "ogrodzie",
                                   "12",   "3",     "i",     "obok"};
  constexpr std::size_t kLexiconSize = sizeof(kLexicon) / sizeof(kLexicon[0]);
  std::vector<std::string> out;
  out.reserve(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    std::size_t words = 4 + rng.next_u64() % 8;
    std::string doc;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) doc += ' ';
      doc += kLexicon[rng.next_u64() % kLexiconSize];
    }
    out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace adaptlab
