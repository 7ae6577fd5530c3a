#include "termspan/spans.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace termspan {

std::int64_t candidate_count(std::int64_t num_tokens, std::int64_t max_len) {
  if (num_tokens < max_len) return num_tokens * (num_tokens + 1) / 2;
  return num_tokens * max_len - max_len * (max_len - 1) / 2;
}

std::vector<SpanCandidate> enumerate_spans(int sentence_id, int num_tokens, int max_len) {
  if (max_len < 1) throw std::invalid_argument("max span length must be >= 1");
  if (num_tokens < 1) throw std::invalid_argument("sentence must have at least one token");
  std::vector<SpanCandidate> out;
  out.reserve(static_cast<std::size_t>(candidate_count(num_tokens, max_len)));
  for (int start = 0; start < num_tokens; ++start) {
    const int last = std::min(num_tokens - 1, start + max_len - 1);
    for (int end = start; end <= last; ++end) {
      out.push_back({sentence_id, start, end});
    }
  }
  return out;
}

std::vector<SpanCandidate> enumerate_spans(const AnnotatedSentence& sentence, int sentence_id,
                                           int max_len) {
  return enumerate_spans(sentence_id, static_cast<int>(sentence.tokens.size()), max_len);
}

std::vector<LabeledCandidate> label_candidates(const std::vector<SpanCandidate>& candidates,
                                               const std::set<GoldSpan>& gold_spans,
                                               CoverageReport* coverage) {
  std::vector<LabeledCandidate> out;
  out.reserve(candidates.size());
  for (const auto& cand : candidates) {
    out.push_back({cand, gold_spans.count({cand.start, cand.end}) > 0});
  }
  if (coverage != nullptr) {
    coverage->gold_total += static_cast<std::int64_t>(gold_spans.size());
    for (const auto& [s, e] : gold_spans) {
      if (e - s + 1 <= coverage->max_span_length) {
        ++coverage->gold_reachable;
      } else {
        ++coverage->gold_unreachable;
      }
    }
  }
  return out;
}

CoverageReport corpus_coverage(const Corpus& corpus, int max_len) {
  CoverageReport report;
  report.max_span_length = max_len;
  for (const auto& sent : corpus) {
    report.gold_total += static_cast<std::int64_t>(sent.gold_spans.size());
    for (const auto& [s, e] : sent.gold_spans) {
      if (e - s + 1 <= max_len) {
        ++report.gold_reachable;
      } else {
        ++report.gold_unreachable;
      }
    }
  }
  return report;
}

std::string CoverageReport::summary() const {
  std::ostringstream out;
  const double frac =
      gold_total > 0 ? static_cast<double>(gold_reachable) / static_cast<double>(gold_total) : 1.0;
  out << "max span length " << max_span_length << ": " << gold_reachable << "/" << gold_total
      << " gold terms reachable (" << 100.0 * frac << "%), " << gold_unreachable
      << " unreachable";
  return out.str();
}

}  // namespace termspan
