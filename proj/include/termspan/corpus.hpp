#ifndef TERMSPAN_CORPUS_HPP
#define TERMSPAN_CORPUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "termspan/types.hpp"

namespace termspan {

// Inclusive token index pair. Ordered so span sets are deterministic.
using GoldSpan = std::pair<int, int>;

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::set<GoldSpan> gold_spans;
  std::vector<std::string> pos_tags;          // empty or aligned to tokens
  std::vector<std::vector<double>> external_vectors;  // empty or aligned to tokens

  bool has_pos() const { return !pos_tags.empty(); }
  bool has_external() const { return !external_vectors.empty(); }
};

using Corpus = std::vector<AnnotatedSentence>;

struct CorpusStats {
  std::int64_t num_sentences = 0;
  std::int64_t num_words = 0;
  std::int64_t num_terms = 0;
  std::int64_t num_nested_terms = 0;
  std::int64_t num_independent_terms = 0;
  int max_term_length = 0;
  std::map<int, std::int64_t> length_histogram;
  double term_ratio = 0.0;
};

struct SplitSpec {
  double train_fraction = 0.9;
  double dev_fraction = 0.05;
  double test_fraction = 0.05;
  std::uint64_t shuffle_seed = 626;

  void validate() const;
};

struct CorpusSplits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

struct ParseResult {
  Corpus sentences;
  std::vector<std::string> warnings;
};

// GENIA-style nested inline markup: <sentence> elements holding whitespace
// tokens, <w> token elements, and arbitrarily nested <cons> term constituents.
// Throws ParseError (with line/column) on malformed markup.
ParseResult parse_nested_annotations(const std::string& document);
ParseResult parse_nested_annotations_file(const std::string& path);

// Plain corpus format: one JSON object per line,
//   {"tokens": [..], "spans": [[start,end],..], "pos": [..]?}
// Indices 0-based inclusive. Throws on out-of-range or inverted spans,
// naming the offending record; duplicate spans are dropped with a warning.
ParseResult load_plain_format(const std::string& path);
void write_plain_format(const Corpus& corpus, const std::string& path);

// Per-token vector file aligned with a plain-format corpus: one JSON object
// per line, {"vectors": [[..],..]}, record r aligned to sentence r.
void load_external_vectors(const std::string& path, Corpus& corpus);

CorpusStats compute_stats(const Corpus& corpus);

// Length histogram CSV (length,count,percentage,cumulative_percentage) with a
// trailing summary block.
std::string stats_report_csv(const CorpusStats& stats);

// Sentence-level partition: seeded shuffle, then counts by largest-remainder
// apportionment of the fractions (dev/test sizes stay faithful to the
// fractions; see split tests for the reference arithmetic).
CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec);

// Split sizes alone, for callers that only need the arithmetic.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

std::int64_t count_words(const Corpus& corpus);

}  // namespace termspan

#endif  // TERMSPAN_CORPUS_HPP
