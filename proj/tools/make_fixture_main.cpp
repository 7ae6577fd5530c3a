// Regenerates the bundled synthetic fixture corpus (markup + plain format).
// The acceptance suite pins the fixture's statistics, so regeneration with a
// different seed or sentence count requires updating those expectations.
#include <fstream>
#include <iostream>

#include "support/fixture.hpp"
#include "termspan/corpus.hpp"

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data/fixtures";
  const int sentences = argc > 2 ? std::atoi(argv[2]) : 200;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 20250626ull;

  const auto fixture = termspan::testing::make_synthetic_corpus(sentences, seed);
  {
    std::ofstream out(out_dir + "/synthetic.genia.xml", std::ios::binary);
    if (!out) {
      std::cerr << "cannot write to " << out_dir << "\n";
      return 1;
    }
    out << fixture.markup;
  }
  termspan::write_plain_format(fixture.corpus, out_dir + "/synthetic.jsonl");

  const auto counts = termspan::testing::reference_counts(fixture.corpus);
  std::cout << "sentences " << counts.sentences << "\n"
            << "words " << counts.words << "\n"
            << "terms " << counts.terms << "\n"
            << "nested " << counts.nested << "\n"
            << "independent " << counts.independent << "\n"
            << "max_term_length " << counts.max_term_length << "\n";
  for (const auto& [len, count] : counts.length_histogram) {
    std::cout << "length " << len << " " << count << "\n";
  }
  return 0;
}
