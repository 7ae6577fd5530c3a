#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/fixture.hpp"
#include "termspan/eval.hpp"

using namespace termspan;

namespace {

Prediction make_pred(int sid, int start, int end, double score, bool selected) {
  Prediction p;
  p.candidate = {sid, start, end};
  p.classifier_prob = 0.9;
  p.rank_score = score;
  p.selected = selected;
  return p;
}

Corpus gold_corpus() {
  Corpus corpus;
  for (int s = 0; s < 5; ++s) {
    AnnotatedSentence sent;
    sent.tokens = {"a", "b", "c", "d"};
    corpus.push_back(sent);
  }
  // 4 gold spans overall.
  corpus[0].gold_spans = {{0, 1}, {2, 2}};
  corpus[1].gold_spans = {{1, 3}};
  corpus[3].gold_spans = {{0, 0}};
  return corpus;
}

}  // namespace

TEST_CASE("perfect predictions give unit precision and recall") {
  const Corpus gold = gold_corpus();
  std::vector<Prediction> preds;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (const auto& [start, end] : gold[s].gold_spans) {
      preds.push_back(make_pred(static_cast<int>(s), start, end, 0.9, true));
    }
  }
  EvalOptions opts;
  opts.max_span_length = 4;
  const auto report = evaluate(preds, gold, opts);
  CHECK(report.precision == 1.0);
  CHECK(report.recall == 1.0);
  CHECK(report.f1 == 1.0);
  CHECK(report.true_positive_count == 4);
}

TEST_CASE("zero selections give zero precision and recall by convention") {
  const auto report = evaluate({}, gold_corpus(), {.max_span_length = 4});
  CHECK(report.precision == 0.0);
  CHECK(report.recall == 0.0);
  CHECK(report.f1 == 0.0);
}

TEST_CASE("hand-counted example: 3 TP, 2 FP, 1 FN") {
  Corpus gold = gold_corpus();
  std::vector<Prediction> preds = {
      make_pred(0, 0, 1, 0.9, true),  // TP
      make_pred(0, 2, 2, 0.8, true),  // TP
      make_pred(1, 1, 3, 0.7, true),  // TP
      make_pred(2, 0, 0, 0.6, true),  // FP
      make_pred(4, 1, 2, 0.5, true),  // FP
      // gold [3](0,0) missed -> FN
  };
  const auto report = evaluate(preds, gold, {.max_span_length = 4});
  CHECK(report.precision == doctest::Approx(0.6));
  CHECK(report.recall == doctest::Approx(0.75));
  CHECK(report.f1 == doctest::Approx(2.0 * 0.6 * 0.75 / 1.35));
}

TEST_CASE("evaluate is invariant under prediction order") {
  Corpus gold = gold_corpus();
  std::vector<Prediction> preds = {
      make_pred(0, 0, 1, 0.9, true),
      make_pred(2, 0, 0, 0.6, true),
      make_pred(1, 1, 3, 0.7, true),
  };
  const auto a = evaluate(preds, gold, {.max_span_length = 4});
  std::reverse(preds.begin(), preds.end());
  const auto b = evaluate(preds, gold, {.max_span_length = 4});
  CHECK(a.precision == b.precision);
  CHECK(a.recall == b.recall);
  CHECK(a.true_positive_count == b.true_positive_count);
}

TEST_CASE("unreachable gold spans count against recall unless disabled") {
  Corpus gold = gold_corpus();  // gold[1] has a length-3 span
  std::vector<Prediction> preds = {
      make_pred(0, 0, 1, 0.9, true),
      make_pred(0, 2, 2, 0.8, true),
      make_pred(3, 0, 0, 0.7, true),
  };
  EvalOptions opts;
  opts.max_span_length = 2;  // the length-3 span is unreachable
  opts.count_unreachable_in_recall = true;
  auto report = evaluate(preds, gold, opts);
  CHECK(report.unreachable_gold_count == 1);
  CHECK(report.gold_count == 4);
  CHECK(report.recall == doctest::Approx(0.75));

  opts.count_unreachable_in_recall = false;
  report = evaluate(preds, gold, opts);
  CHECK(report.unreachable_gold_count == 1);
  CHECK(report.gold_count == 3);
  CHECK(report.recall == doctest::Approx(1.0));
}

TEST_CASE("classifier filter counts all positives, ranker only selections") {
  Corpus gold = gold_corpus();
  std::vector<Prediction> preds = {
      make_pred(0, 0, 1, 0.9, true),
      make_pred(0, 2, 2, 0.8, false),  // positive but not selected
  };
  EvalOptions opts;
  opts.max_span_length = 4;
  opts.filter = PredictionFilter::Classifier;
  CHECK(evaluate(preds, gold, opts).selected_count == 2);
  opts.filter = PredictionFilter::Ranker;
  CHECK(evaluate(preds, gold, opts).selected_count == 1);
}

TEST_CASE("ratio sweep produces nested selections with non-decreasing recall") {
  Corpus gold = gold_corpus();
  // 12 scored candidates over 20 total words.
  Rng rng(77);
  std::vector<Prediction> preds;
  for (int s = 0; s < 5; ++s) {
    for (int i = 0; i < 3; ++i) {
      preds.push_back(make_pred(s, i, i, rng.uniform(), false));
    }
  }
  const auto alphas = default_ratio_grid();
  CHECK(alphas.size() == 23);
  const auto sweep = sweep_term_ratio(preds, gold, 20, alphas, {.max_span_length = 4});
  REQUIRE(sweep.points.size() == 23);
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& point = sweep.points[i];
    CHECK(point.k == static_cast<std::int64_t>(std::floor(alphas[i] * 20.0)));
    // F1 identity at every point.
    const auto& r = point.report;
    const double expect_f1 =
        r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    CHECK(r.f1 == doctest::Approx(expect_f1));
    if (i > 0) {
      CHECK(point.report.recall >= sweep.points[i - 1].report.recall);
      CHECK(point.k >= sweep.points[i - 1].k);
    }
  }
  const std::string csv = sweep.csv();
  CHECK(csv.find("alpha,precision,recall,f1,k_num,true_term_num,true_positive") !=
        std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 24);  // header + 23 rows
}

TEST_CASE("ratio sweep demands a strictly increasing grid") {
  CHECK_THROWS_AS(
      sweep_term_ratio({}, gold_corpus(), 10, {0.1, 0.1}, {.max_span_length = 4}),
      ConfigError);
}

TEST_CASE("true positive distribution concentrates mass where TPs rank") {
  Corpus gold = gold_corpus();
  // Put the four gold spans at the best scores: all TPs land in the first bin.
  std::vector<Prediction> preds;
  preds.push_back(make_pred(0, 0, 1, 0.99, false));
  preds.push_back(make_pred(0, 2, 2, 0.98, false));
  preds.push_back(make_pred(1, 1, 3, 0.97, false));
  preds.push_back(make_pred(3, 0, 0, 0.96, false));
  for (int i = 0; i < 8; ++i) {
    preds.push_back(make_pred(4, i % 4, i % 4, 0.5 - 0.01 * i, false));
  }
  const auto dist = true_positive_distribution(preds, gold, 40, 0.30);
  CHECK(dist.total_true_positives == 4);
  REQUIRE(dist.bins.size() == 22);
  CHECK(dist.bins[0].ratio == doctest::Approx(0.09));
  // Ranks 1..3 of 40 words have ratio <= 0.09; rank 4 (= 0.10) falls in the
  // next bin.
  CHECK(dist.bins[0].count == 3);
  CHECK(dist.bins[1].count == 1);
  std::int64_t total = 0;
  for (const auto& b : dist.bins) total += b.count;
  CHECK(total == 4);
}

TEST_CASE("uniform random scores spread true positives roughly evenly") {
  // Monte-Carlo sanity: score everything uniformly at random, every candidate
  // gold. Bin counts then follow the bin widths: the first bin (ratio 0.09)
  // absorbs 9/30 of selections, later bins 1/30 each.
  Rng rng(123);
  Corpus gold;
  AnnotatedSentence sent;
  sent.tokens.assign(100, "w");
  for (int i = 0; i < 100; ++i) sent.gold_spans.insert({i, i});
  gold.push_back(sent);

  const int trials = 200;
  std::vector<double> mass(22, 0.0);
  for (int t = 0; t < trials; ++t) {
    std::vector<Prediction> preds;
    for (int i = 0; i < 100; ++i) preds.push_back(make_pred(0, i, i, rng.uniform(), false));
    const auto dist = true_positive_distribution(preds, gold, 100, 0.30);
    REQUIRE(dist.bins.size() == 22);
    for (std::size_t b = 0; b < 22; ++b) {
      mass[b] += static_cast<double>(dist.bins[b].count) / trials;
    }
  }
  // K = 30 selections per trial; expected per-bin count is 9 for the first
  // bin (ratios .01-.09) and 1 per later bin.
  CHECK(mass[0] == doctest::Approx(9.0).epsilon(0.05));
  for (std::size_t b = 1; b < 22; ++b) {
    CHECK(mass[b] == doctest::Approx(1.0).epsilon(0.3));
  }
}

TEST_CASE("length sweep in restriction mode is monotone in recall for the classifier") {
  ModelConfig cfg = testing::tiny_config(6, 4);
  cfg.encoder.word_dim = 12;
  cfg.head_hidden = 16;
  cfg.batch_size = 2;
  cfg.stage2_batch_size = 100;
  cfg.stage1_max_epochs = 150;
  cfg.stage2_max_epochs = 3;
  cfg.early_stop = 150;
  auto fixture = testing::make_synthetic_corpus(12, 71);
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 8);
  Corpus dev(fixture.corpus.begin() + 8, fixture.corpus.begin() + 10);
  Corpus test(fixture.corpus.begin() + 10, fixture.corpus.end());
  Vocab vocab = build_vocab(train, 1);
  TermExtractionModel model(cfg, std::move(vocab));
  model.train(train, dev);

  const auto sweep = sweep_max_length_restrict(model, test, 0.23, 1, 4,
                                               {.max_span_length = 4});
  REQUIRE(sweep.points.size() == 4);
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    // Candidate sets are nested in k, so classifier recall cannot drop
    // (the gold denominator is fixed by the eval options here).
    CHECK(sweep.points[i].classifier.true_positive_count >=
          sweep.points[i - 1].classifier.true_positive_count);
  }
  for (const auto& point : sweep.points) {
    // Ranking only filters the positive space.
    CHECK(point.ranker.recall <= point.classifier.recall + 1e-12);
    CHECK(point.ranker.true_positive_count <= point.classifier.true_positive_count);
  }
  CHECK(sweep.csv().find("max_length") != std::string::npos);

  CHECK_THROWS_AS(sweep_max_length_restrict(model, test, 0.23, 1, 10, {.max_span_length = 4}),
                  ConfigError);
}

TEST_CASE("length sweep in retraining mode trains one model per length") {
  ModelConfig cfg = testing::tiny_config(6, 4);
  cfg.encoder.word_dim = 12;
  cfg.head_hidden = 16;
  cfg.batch_size = 2;
  cfg.stage2_batch_size = 100;
  cfg.stage1_max_epochs = 60;
  cfg.stage2_max_epochs = 2;
  cfg.early_stop = 60;
  const auto fixture = testing::make_synthetic_corpus(16, 83);
  CorpusSplits splits;
  splits.train.assign(fixture.corpus.begin(), fixture.corpus.begin() + 10);
  splits.dev.assign(fixture.corpus.begin() + 10, fixture.corpus.begin() + 13);
  splits.test.assign(fixture.corpus.begin() + 13, fixture.corpus.end());

  const auto sweep =
      sweep_max_length_retrain(cfg, splits, 0.23, 2, 3, {.max_span_length = 4});
  CHECK(sweep.retrained);
  REQUIRE(sweep.points.size() == 2);
  CHECK(sweep.points[0].max_length == 2);
  CHECK(sweep.points[1].max_length == 3);
  for (const auto& point : sweep.points) {
    CHECK(point.ranker.recall <= point.classifier.recall + 1e-12);
  }
}
