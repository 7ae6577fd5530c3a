#ifndef TERMSPAN_TESTS_FIXTURE_HPP
#define TERMSPAN_TESTS_FIXTURE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "termspan/corpus.hpp"
#include "termspan/model.hpp"

namespace termspan::testing {

// Deterministic synthetic corpus with nested annotations. The markup string
// holds the same sentences in GENIA-style XML (spans are laminar so they can
// nest as elements).
struct SyntheticCorpus {
  Corpus corpus;
  std::string markup;
};

SyntheticCorpus make_synthetic_corpus(int num_sentences, std::uint64_t seed);

// Reference statistics computed by token-coverage counting, independent of
// compute_stats' pairwise route.
struct ReferenceCounts {
  std::int64_t sentences = 0;
  std::int64_t words = 0;
  std::int64_t terms = 0;
  std::int64_t nested = 0;
  std::int64_t independent = 0;
  int max_term_length = 0;
  std::map<int, std::int64_t> length_histogram;
};

ReferenceCounts reference_counts(const Corpus& corpus);

// The six-token running example with gold spans {[0,4],[0,5],[1,1]}.
AnnotatedSentence example_sentence();
std::string example_markup();

// Small dimensions for fast unit tests; dropout off so runs are repeatable
// without consuming the dropout stream.
ModelConfig tiny_config(int lstm_hidden = 3, int max_span_length = 3);

// Central-difference gradient check over sampled parameter entries.
// loss(): builds a fresh graph and returns the loss value; when accumulate is
// true it must also run backward so gradients land in the parameters.
struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

GradCheckResult check_gradients(const std::vector<Parameter*>& params,
                                const std::function<double(bool accumulate)>& loss,
                                int samples, std::uint64_t seed, double step = 1e-5);

}  // namespace termspan::testing

#endif  // TERMSPAN_TESTS_FIXTURE_HPP
