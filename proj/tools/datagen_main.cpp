// Synthetic dataset generator for the training CLI: SFT corpora, preference
// triples, arithmetic task files, and plain-text corpora for tokenizer and
// aux-embedding training.

#include <iostream>

#include <CLI11.hpp>

#include "adaptlab/data.hpp"
#include "adaptlab/rng.hpp"

int main(int argc, char** argv) {
  using namespace adaptlab;
  CLI::App app{"synthetic dataset generator"};
  app.require_subcommand(1);

  std::string out;
  std::uint64_t seed = 7;
  std::size_t count = 200;
  std::size_t vocab = 13;

  auto* sft = app.add_subcommand("sft", "masked copy-pattern SFT corpus");
  sft->add_option("--out", out)->required();
  sft->add_option("--seed", seed);
  sft->add_option("--count", count);
  sft->callback([&] {
    RngStream rng(seed, 0);
    RngStream stream = rng.split("sft-data");
    save_sft_dataset(synthetic_sft_corpus(count, stream), out);
    std::cout << count << " samples -> " << out << '\n';
  });

  auto* pref = app.add_subcommand("pref", "random preference triples");
  pref->add_option("--out", out)->required();
  pref->add_option("--seed", seed);
  pref->add_option("--count", count);
  pref->add_option("--vocab", vocab);
  pref->callback([&] {
    RngStream rng(seed, 0);
    RngStream stream = rng.split("pref-data");
    save_preference_dataset(synthetic_pref_dataset(count, vocab, stream), out);
    std::cout << count << " examples -> " << out << '\n';
  });

  auto* arith = app.add_subcommand("arith", "all single-digit addition tasks");
  arith->add_option("--out", out)->required();
  arith->callback([&] {
    std::vector<TaskRecord> records = arithmetic_task_records();
    save_task_file(records, out);
    std::cout << records.size() << " tasks -> " << out << '\n';
  });

  auto* corpus = app.add_subcommand("corpus", "plain-text corpus (one document per line)");
  corpus->add_option("--out", out)->required();
  corpus->add_option("--seed", seed);
  corpus->add_option("--count", count);
  corpus->callback([&] {
    RngStream rng(seed, 0);
    RngStream stream = rng.split("corpus");
    std::vector<std::string> docs = synthetic_text_corpus(count, stream);
    std::ofstream file(out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + out);
    for (const std::string& d : docs) file << d << '\n';
    std::cout << docs.size() << " documents -> " << out << '\n';
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
