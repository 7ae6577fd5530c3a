#ifndef TERMSPAN_EVAL_HPP
#define TERMSPAN_EVAL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "termspan/model.hpp"

namespace termspan {

// Which predictions count as emitted terms: the classifier's positive set, or
// the ranker's top-K selection within it.
enum class PredictionFilter { Classifier, Ranker };

struct LengthBucket {
  std::int64_t true_positive = 0;
  std::int64_t selected = 0;
  std::int64_t gold = 0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t true_positive_count = 0;
  std::int64_t selected_count = 0;
  std::int64_t gold_count = 0;
  std::map<int, LengthBucket> per_length;
  std::int64_t unreachable_gold_count = 0;

  std::string summary() const;
};

struct EvalOptions {
  PredictionFilter filter = PredictionFilter::Ranker;
  int max_span_length = 5;  // for the unreachable-gold accounting
  // When false, gold spans longer than max_span_length leave the recall
  // denominator (they are always reported as unreachable either way).
  bool count_unreachable_in_recall = true;
};

// Exact-match span evaluation: a prediction scores iff its
// (sentence_id, start, end) appears among the gold spans.
EvalReport evaluate(const std::vector<Prediction>& predictions, const Corpus& gold,
                    const EvalOptions& opts);

struct RatioSweepPoint {
  double alpha = 0.0;
  EvalReport report;
  std::int64_t k = 0;
  std::int64_t true_positive = 0;
};

struct RatioSweepResult {
  std::vector<RatioSweepPoint> points;
  std::int64_t total_words = 0;
  std::int64_t gold_count = 0;

  std::string csv() const;
};

// Re-ranks a fixed scored prediction set at each alpha and evaluates the
// ranker selection. Alphas must be strictly increasing.
RatioSweepResult sweep_term_ratio(std::vector<Prediction> predictions, const Corpus& gold,
                                  std::int64_t total_words, const std::vector<double>& alphas,
                                  const EvalOptions& opts);

std::vector<double> default_ratio_grid();  // 0.08 .. 0.30 step 0.01

struct LengthSweepPoint {
  int max_length = 0;
  EvalReport classifier;
  EvalReport ranker;
  std::int64_t k = 0;
};

struct LengthSweepResult {
  std::vector<LengthSweepPoint> points;
  bool retrained = false;  // false: single checkpoint restricted at inference

  std::string csv() const;
};

// Restriction mode: one trained model, candidates capped at each length at
// prediction time. An approximation of the per-length retraining experiment.
LengthSweepResult sweep_max_length_restrict(const TermExtractionModel& model, const Corpus& test,
                                            double alpha, int min_len, int max_len,
                                            const EvalOptions& opts);

// Retraining mode: a fresh model per length, trained on the given splits.
LengthSweepResult sweep_max_length_retrain(const ModelConfig& base_cfg, const CorpusSplits& splits,
                                           double alpha, int min_len, int max_len,
                                           const EvalOptions& opts,
                                           const std::function<void(const std::string&)>& progress =
                                               nullptr);

struct TruePositiveBin {
  double ratio = 0.0;  // upper edge of the rank-ratio bin
  std::int64_t count = 0;
};

struct TruePositiveDistribution {
  std::vector<TruePositiveBin> bins;
  std::int64_t total_true_positives = 0;

  std::string csv() const;
};

// Bins the ranked true positives by rank/total_words. The first bin absorbs
// every rank at or below its edge.
TruePositiveDistribution true_positive_distribution(std::vector<Prediction> predictions,
                                                    const Corpus& gold, std::int64_t total_words,
                                                    double alpha = 0.30, double bin_lo = 0.09,
                                                    double bin_hi = 0.30, double bin_step = 0.01);

}  // namespace termspan

#endif  // TERMSPAN_EVAL_HPP
