#include "termspan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace termspan {

namespace {

bool counts_as_emitted(const Prediction& pred, PredictionFilter filter) {
  switch (filter) {
    case PredictionFilter::Classifier:
      return pred.rank_score.has_value();  // classifier positives carry a score
    case PredictionFilter::Ranker:
      return pred.selected;
  }
  return false;
}

double f1_of(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

EvalReport evaluate(const std::vector<Prediction>& predictions, const Corpus& gold,
                    const EvalOptions& opts) {
  EvalReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (const auto& [start, end] : gold[s].gold_spans) {
      const int len = end - start + 1;
      const bool reachable = len <= opts.max_span_length;
      if (!reachable) ++report.unreachable_gold_count;
      if (reachable || opts.count_unreachable_in_recall) {
        ++report.gold_count;
        ++report.per_length[len].gold;
      }
    }
  }
  for (const auto& pred : predictions) {
    if (!counts_as_emitted(pred, opts.filter)) continue;
    ++report.selected_count;
    const int len = pred.candidate.length();
    ++report.per_length[len].selected;
    const auto sid = static_cast<std::size_t>(pred.candidate.sentence_id);
    const bool hit = sid < gold.size() &&
                     gold[sid].gold_spans.count({pred.candidate.start, pred.candidate.end}) > 0;
    if (hit) {
      ++report.true_positive_count;
      ++report.per_length[len].true_positive;
    }
  }
  report.precision = report.selected_count > 0 ? static_cast<double>(report.true_positive_count) /
                                                     static_cast<double>(report.selected_count)
                                               : 0.0;
  report.recall = report.gold_count > 0 ? static_cast<double>(report.true_positive_count) /
                                              static_cast<double>(report.gold_count)
                                        : 0.0;
  report.f1 = f1_of(report.precision, report.recall);
  return report;
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  out << "precision=" << precision << " recall=" << recall << " f1=" << f1 << " (tp="
      << true_positive_count << " selected=" << selected_count << " gold=" << gold_count
      << " unreachable_gold=" << unreachable_gold_count << ")";
  return out.str();
}

std::vector<double> default_ratio_grid() {
  std::vector<double> alphas;
  for (int i = 8; i <= 30; ++i) alphas.push_back(static_cast<double>(i) / 100.0);
  return alphas;
}

RatioSweepResult sweep_term_ratio(std::vector<Prediction> predictions, const Corpus& gold,
                                  std::int64_t total_words, const std::vector<double>& alphas,
                                  const EvalOptions& opts) {
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    if (alphas[i] <= alphas[i - 1]) {
      throw ConfigError("ratio sweep grid must be strictly increasing");
    }
  }
  RatioSweepResult result;
  result.total_words = total_words;
  EvalOptions ranker_opts = opts;
  ranker_opts.filter = PredictionFilter::Ranker;
  for (double alpha : alphas) {
    RatioSweepPoint point;
    point.alpha = alpha;
    point.k = rank_topk(predictions, total_words, alpha);
    point.report = evaluate(predictions, gold, ranker_opts);
    point.true_positive = point.report.true_positive_count;
    result.gold_count = point.report.gold_count;
    result.points.push_back(std::move(point));
  }
  return result;
}

std::string RatioSweepResult::csv() const {
  std::ostringstream out;
  out << "alpha,precision,recall,f1,k_num,true_term_num,true_positive\n";
  for (const auto& p : points) {
    out << p.alpha << "," << p.report.precision << "," << p.report.recall << "," << p.report.f1
        << "," << p.k << "," << gold_count << "," << p.true_positive << "\n";
  }
  return out.str();
}

LengthSweepResult sweep_max_length_restrict(const TermExtractionModel& model, const Corpus& test,
                                            double alpha, int min_len, int max_len,
                                            const EvalOptions& opts) {
  if (min_len < 1 || max_len < min_len) throw ConfigError("invalid length sweep range");
  if (max_len > model.config().max_span_length) {
    throw ConfigError("length sweep upper bound exceeds the checkpoint's max span length");
  }
  LengthSweepResult result;
  std::int64_t total_words = 0;
  for (const auto& sent : test) total_words += static_cast<std::int64_t>(sent.tokens.size());
  for (int len = min_len; len <= max_len; ++len) {
    PredictOptions popts;
    popts.alpha = alpha;
    popts.max_span_length = len;
    auto predictions = model.predict(test, popts);
    LengthSweepPoint point;
    point.max_length = len;
    EvalOptions local = opts;
    local.max_span_length = len;
    local.filter = PredictionFilter::Classifier;
    point.classifier = evaluate(predictions, test, local);
    local.filter = PredictionFilter::Ranker;
    point.ranker = evaluate(predictions, test, local);
    point.k = static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(total_words)));
    result.points.push_back(std::move(point));
  }
  return result;
}

LengthSweepResult sweep_max_length_retrain(
    const ModelConfig& base_cfg, const CorpusSplits& splits, double alpha, int min_len, int max_len,
    const EvalOptions& opts, const std::function<void(const std::string&)>& progress) {
  if (min_len < 1 || max_len < min_len) throw ConfigError("invalid length sweep range");
  LengthSweepResult result;
  result.retrained = true;
  std::int64_t total_words = 0;
  for (const auto& sent : splits.test) total_words += static_cast<std::int64_t>(sent.tokens.size());
  for (int len = min_len; len <= max_len; ++len) {
    if (progress) progress("length sweep: training model with max span length " + std::to_string(len));
    ModelConfig cfg = base_cfg;
    cfg.max_span_length = len;
    Vocab vocab = build_vocab(splits.train, cfg.vocab_min_count, cfg.encoder.lowercase_words);
    TermExtractionModel model(cfg, std::move(vocab));
    model.train(splits.train, splits.dev, progress);

    PredictOptions popts;
    popts.alpha = alpha;
    auto predictions = model.predict(splits.test, popts);
    LengthSweepPoint point;
    point.max_length = len;
    EvalOptions local = opts;
    local.max_span_length = len;
    local.filter = PredictionFilter::Classifier;
    point.classifier = evaluate(predictions, splits.test, local);
    local.filter = PredictionFilter::Ranker;
    point.ranker = evaluate(predictions, splits.test, local);
    point.k = static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(total_words)));
    result.points.push_back(std::move(point));
  }
  return result;
}

std::string LengthSweepResult::csv() const {
  std::ostringstream out;
  out << "max_length,clf_precision,clf_recall,clf_f1,rank_precision,rank_recall,rank_f1,k_num\n";
  for (const auto& p : points) {
    out << p.max_length << "," << p.classifier.precision << "," << p.classifier.recall << ","
        << p.classifier.f1 << "," << p.ranker.precision << "," << p.ranker.recall << ","
        << p.ranker.f1 << "," << p.k << "\n";
  }
  return out.str();
}

TruePositiveDistribution true_positive_distribution(std::vector<Prediction> predictions,
                                                    const Corpus& gold, std::int64_t total_words,
                                                    double alpha, double bin_lo, double bin_hi,
                                                    double bin_step) {
  rank_topk(predictions, total_words, alpha);

  std::vector<const Prediction*> selected;
  for (const auto& pred : predictions) {
    if (pred.selected) selected.push_back(&pred);
  }
  std::sort(selected.begin(), selected.end(), [](const Prediction* a, const Prediction* b) {
    if (*a->rank_score != *b->rank_score) return *a->rank_score > *b->rank_score;
    return a->candidate < b->candidate;
  });

  TruePositiveDistribution dist;
  const int num_bins = static_cast<int>(std::llround((bin_hi - bin_lo) / bin_step)) + 1;
  for (int b = 0; b < num_bins; ++b) {
    dist.bins.push_back({bin_lo + bin_step * b, 0});
  }
  for (std::size_t rank0 = 0; rank0 < selected.size(); ++rank0) {
    const auto& cand = selected[rank0]->candidate;
    const auto sid = static_cast<std::size_t>(cand.sentence_id);
    const bool hit = sid < gold.size() && gold[sid].gold_spans.count({cand.start, cand.end}) > 0;
    if (!hit) continue;
    ++dist.total_true_positives;
    const double ratio =
        static_cast<double>(rank0 + 1) / std::max<std::int64_t>(1, total_words);
    int bin = 0;
    while (bin + 1 < num_bins && ratio > dist.bins[static_cast<std::size_t>(bin)].ratio + 1e-12) {
      ++bin;
    }
    ++dist.bins[static_cast<std::size_t>(bin)].count;
  }
  return dist;
}

std::string TruePositiveDistribution::csv() const {
  std::ostringstream out;
  out << "ratio,true_positive_count\n";
  for (const auto& bin : bins) {
    out << bin.ratio << "," << bin.count << "\n";
  }
  return out.str();
}

}  // namespace termspan
