#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adaptlab/model.hpp"
#include "adaptlab/pref_losses.hpp"
#include "adaptlab/rng.hpp"

namespace adaptlab {

// SFT dataset line: "<token ids><TAB><mask bits>", both space-separated and
// the same length.
void save_sft_dataset(const std::vector<MaskedSequence>& samples, const std::string& path);
std::vector<MaskedSequence> load_sft_dataset(const std::string& path);

// Task file line: "<prompt ids><TAB><answer ids>".
struct TaskRecord {
  std::vector<int> prompt;
  std::vector<int> answer;
};
void save_task_file(const std::vector<TaskRecord>& records, const std::string& path);
std::vector<TaskRecord> load_task_file(const std::string& path);

// Synthetic copy-pattern corpus over the arithmetic vocabulary: a content
// token, a noise token, then the content token repeated; prompt positions
// masked. Deterministic given the stream.
std::vector<MaskedSequence> synthetic_sft_corpus(std::size_t count, RngStream& rng);

// All 100 single-digit addition tasks with their answers.
std::vector<TaskRecord> arithmetic_task_records();

// Random preference triples with distinct chosen/rejected responses.
std::vector<PreferenceExample> synthetic_pref_dataset(std::size_t count, std::size_t vocab,
                                                      RngStream& rng);

// Sentences drawn from a small fixed lexicon; one document per entry.
std::vector<std::string> synthetic_text_corpus(std::size_t docs, RngStream& rng);

}  // namespace adaptlab
