#ifndef TERMSPAN_SPANS_HPP
#define TERMSPAN_SPANS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "termspan/corpus.hpp"

namespace termspan {

struct SpanCandidate {
  int sentence_id = 0;
  int start = 0;
  int end = 0;  // inclusive

  int length() const { return end - start + 1; }

  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
  friend auto operator<=>(const SpanCandidate&, const SpanCandidate&) = default;
};

struct LabeledCandidate {
  SpanCandidate candidate;
  bool is_term = false;
};

// Gold spans too long to appear among candidates at a given max length.
struct CoverageReport {
  int max_span_length = 0;
  std::int64_t gold_total = 0;
  std::int64_t gold_reachable = 0;
  std::int64_t gold_unreachable = 0;

  std::string summary() const;
};

// All spans of length <= max_len, ordered lexicographically by (start, end).
// Exactly n*max_len - max_len*(max_len-1)/2 candidates when n >= max_len,
// n*(n+1)/2 otherwise.
std::vector<SpanCandidate> enumerate_spans(int sentence_id, int num_tokens, int max_len);
std::vector<SpanCandidate> enumerate_spans(const AnnotatedSentence& sentence, int sentence_id,
                                           int max_len);

std::int64_t candidate_count(std::int64_t num_tokens, std::int64_t max_len);

// Labels candidates against the sentence's gold spans and accounts for gold
// spans that no candidate can reach (length > max_len).
std::vector<LabeledCandidate> label_candidates(const std::vector<SpanCandidate>& candidates,
                                               const std::set<GoldSpan>& gold_spans,
                                               CoverageReport* coverage = nullptr);

CoverageReport corpus_coverage(const Corpus& corpus, int max_len);

}  // namespace termspan

#endif  // TERMSPAN_SPANS_HPP
