#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "support/fixture.hpp"
#include "termspan/checkpoint.hpp"
#include "termspan/model.hpp"

using namespace termspan;

namespace {

std::vector<Prediction> scored(std::initializer_list<double> scores) {
  std::vector<Prediction> preds;
  int i = 0;
  for (double s : scores) {
    Prediction p;
    p.candidate = {0, i, i};
    p.classifier_prob = 0.9;
    p.rank_score = s;
    preds.push_back(p);
    ++i;
  }
  return preds;
}

}  // namespace

TEST_CASE("rank_topk computes K by floor arithmetic") {
  auto preds = scored({0.9, 0.8, 0.7, 0.6, 0.5});
  CHECK(rank_topk(preds, 100, 0.23) == 23);
  int selected = 0;
  for (const auto& p : preds) selected += p.selected ? 1 : 0;
  CHECK(selected == 5);  // fewer positives than K selects them all

  CHECK(rank_topk(preds, 100, 0.02) == 2);
  selected = 0;
  for (const auto& p : preds) selected += p.selected ? 1 : 0;
  CHECK(selected == 2);
  CHECK(preds[0].selected);
  CHECK(preds[1].selected);
}

TEST_CASE("rank_topk breaks score ties by position") {
  std::vector<Prediction> preds;
  for (int sid = 2; sid >= 0; --sid) {
    Prediction p;
    p.candidate = {sid, 0, 0};
    p.classifier_prob = 0.9;
    p.rank_score = 0.9;
    preds.push_back(p);
  }
  rank_topk(preds, 10, 0.2);  // K = 2
  // Lexicographically earliest positions win the tie.
  for (const auto& p : preds) {
    CHECK(p.selected == (p.candidate.sentence_id <= 1));
  }
}

TEST_CASE("rank_topk rejects non-positive alpha and clears stale flags") {
  auto preds = scored({0.9});
  CHECK_THROWS_AS(rank_topk(preds, 10, 0.0), ConfigError);
  CHECK_THROWS_AS(rank_topk(preds, 10, -1.0), ConfigError);

  preds[0].selected = true;
  rank_topk(preds, 0, 0.23);  // K = 0
  CHECK(!preds[0].selected);
}

TEST_CASE("negative candidates never rank") {
  std::vector<Prediction> preds = scored({0.9, 0.8});
  Prediction negative;
  negative.candidate = {0, 5, 5};
  negative.classifier_prob = 0.2;  // no rank_score
  preds.push_back(negative);
  rank_topk(preds, 100, 0.23);
  CHECK(!preds.back().selected);
}

TEST_CASE("classification loss matches analytic values") {
  CHECK(classification_loss({0.5, 0.5}, {true, false}) == doctest::Approx(std::log(2.0)));
  CHECK(classification_loss({0.9}, {true}) == doctest::Approx(-std::log(0.9)));
  CHECK(classification_loss({1.0, 0.0}, {true, false}) == doctest::Approx(0.0).epsilon(1e-5));
  // Clamping keeps the loss finite at the boundaries.
  CHECK(std::isfinite(classification_loss({0.0, 1.0}, {true, false})));
  CHECK(classification_loss({}, {}) == 0.0);
}

TEST_CASE("ranking loss matches analytic values") {
  // All raw outputs zero: 0.5 + 0.5.
  auto v = ranking_loss({0.0}, {0.0});
  CHECK(v.loss == doctest::Approx(1.0));

  // One gold at 2, one non-gold at -2.
  v = ranking_loss({2.0}, {-2.0});
  CHECK(v.loss == doctest::Approx(0.238406).epsilon(1e-5));

  // Saturated outputs drive the loss to zero.
  v = ranking_loss({40.0}, {-40.0});
  CHECK(v.loss == doctest::Approx(0.0).epsilon(1e-9));

  // Empty groups contribute zero and are flagged.
  v = ranking_loss({}, {0.0});
  CHECK(v.gold_empty);
  CHECK(v.loss == doctest::Approx(0.5));
  v = ranking_loss({0.0}, {});
  CHECK(v.nongold_empty);
  CHECK(v.loss == doctest::Approx(0.5));
}

namespace {

// Small but trainable: enough capacity and steps that the classifier's
// positive space is non-empty when stage two starts.
ModelConfig trainable_config() {
  ModelConfig cfg = testing::tiny_config();
  cfg.encoder.word_dim = 12;
  cfg.encoder.lstm_hidden = 6;
  cfg.head_hidden = 16;
  cfg.batch_size = 2;
  cfg.stage2_batch_size = 100;
  cfg.stage1_max_epochs = 150;
  cfg.stage2_max_epochs = 6;
  cfg.early_stop = 150;
  return cfg;
}

struct TrainedTiny {
  ModelConfig cfg;
  Corpus train;
  Corpus dev;
  std::unique_ptr<TermExtractionModel> model;
  TrainResult result;

  TrainedTiny() {
    cfg = trainable_config();
    auto fixture = testing::make_synthetic_corpus(14, 41);
    train.assign(fixture.corpus.begin(), fixture.corpus.begin() + 10);
    dev.assign(fixture.corpus.begin() + 10, fixture.corpus.end());
    Vocab vocab = build_vocab(train, 1);
    model = std::make_unique<TermExtractionModel>(cfg, std::move(vocab));
    result = model->train(train, dev);
  }
};

const TrainedTiny& trained_tiny() {
  static TrainedTiny instance;
  return instance;
}

}  // namespace

TEST_CASE("zero-weight classifier emits probability one half and classifies negative") {
  ModelConfig cfg = testing::tiny_config();
  Vocab vocab = build_vocab({testing::example_sentence()}, 1);
  TermExtractionModel model(cfg, std::move(vocab));
  for (auto& p : model.stage2_params().all()) p->value.setZero();
  // Zero the classifier head only.
  for (auto& p : model.stage1_params().all()) {
    if (p->name.rfind("clf.", 0) == 0) p->value.setZero();
  }
  const auto preds = model.predict({testing::example_sentence()}, {.alpha = 0.23});
  REQUIRE(!preds.empty());
  for (const auto& pred : preds) {
    CHECK(pred.classifier_prob == doctest::Approx(0.5));
    CHECK(!pred.rank_score.has_value());  // strict > 0.5 resolves the tie to negative
    CHECK(!pred.selected);
  }
}

TEST_CASE("scores stay in the open unit interval and preserve raw order") {
  const auto& tiny = trained_tiny();
  const auto preds = tiny.model->predict(tiny.dev, {.alpha = 0.3});
  for (const auto& p : preds) {
    CHECK(p.classifier_prob > 0.0);
    CHECK(p.classifier_prob < 1.0);
    if (p.rank_score) {
      CHECK(*p.rank_score > 0.0);
      CHECK(*p.rank_score < 1.0);
    }
  }
}

TEST_CASE("training loss decreases and early stopping bookkeeping is consistent") {
  const auto& tiny = trained_tiny();
  REQUIRE(tiny.result.stage1.size() >= 5);
  const auto& s1 = tiny.result.stage1;
  CHECK(s1.back().train_loss < s1.front().train_loss);
  CHECK(tiny.result.stage1_best_epoch >= 1);
  CHECK(tiny.result.stage1_best_dev_loss > 0.0);
  REQUIRE(!tiny.result.stage2.empty());
  CHECK(tiny.result.stage2_best_epoch >= 1);
}

TEST_CASE("stage two leaves stage-one parameters bit-identical") {
  ModelConfig cfg = trainable_config();
  cfg.stage2_max_epochs = 4;
  auto fixture = testing::make_synthetic_corpus(14, 43);
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 10);
  Corpus dev(fixture.corpus.begin() + 10, fixture.corpus.end());
  Vocab vocab = build_vocab(train, 1);
  TermExtractionModel model(cfg, std::move(vocab));

  // Stage-one digest is taken after stage one by re-running: train() restores
  // the best stage-one snapshot before stage two starts, so compare against a
  // second model trained identically but with stage two cut to one epoch.
  ModelConfig cfg_short = cfg;
  cfg_short.stage2_max_epochs = 1;
  Vocab vocab2 = build_vocab(train, 1);
  TermExtractionModel reference(cfg_short, std::move(vocab2));
  reference.train(train, dev);
  model.train(train, dev);
  CHECK(model.stage1_digest() == reference.stage1_digest());
  CHECK(model.stage2_digest() != reference.stage2_digest());
}

TEST_CASE("training is deterministic for a fixed seed") {
  ModelConfig cfg = trainable_config();
  cfg.stage2_max_epochs = 2;
  cfg.encoder.dropout = 0.3;  // exercise the dropout stream too
  auto fixture = testing::make_synthetic_corpus(14, 47);
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 10);
  Corpus dev(fixture.corpus.begin() + 10, fixture.corpus.end());

  auto run = [&]() {
    Vocab vocab = build_vocab(train, 1);
    TermExtractionModel model(cfg, std::move(vocab));
    return model.train(train, dev);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  REQUIRE(a.stage1.size() == b.stage1.size());
  for (std::size_t i = 0; i < a.stage1.size(); ++i) {
    CHECK(a.stage1[i].train_loss == b.stage1[i].train_loss);
    CHECK(a.stage1[i].dev_loss == b.stage1[i].dev_loss);
  }
  REQUIRE(a.stage2.size() == b.stage2.size());
  for (std::size_t i = 0; i < a.stage2.size(); ++i) {
    CHECK(a.stage2[i].dev_loss == b.stage2[i].dev_loss);
  }
}

TEST_CASE("predict is deterministic and duplicates get identical scores") {
  const auto& tiny = trained_tiny();
  Corpus doubled = {tiny.dev[0], tiny.dev[0]};
  const auto preds = tiny.model->predict(doubled, {.alpha = 0.23});
  std::vector<const Prediction*> first, second;
  for (const auto& p : preds) {
    (p.candidate.sentence_id == 0 ? first : second).push_back(&p);
  }
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i]->classifier_prob == second[i]->classifier_prob);
    CHECK(first[i]->rank_score.has_value() == second[i]->rank_score.has_value());
    if (first[i]->rank_score) CHECK(*first[i]->rank_score == *second[i]->rank_score);
  }
}

TEST_CASE("over-long sentences fail per sentence while the batch continues") {
  ModelConfig cfg = testing::tiny_config();
  cfg.max_sentence_tokens = 8;
  Corpus corpus = {testing::example_sentence()};
  AnnotatedSentence longer;
  for (int i = 0; i < 12; ++i) longer.tokens.push_back("tok" + std::to_string(i));
  corpus.push_back(longer);
  Vocab vocab = build_vocab(corpus, 1);
  TermExtractionModel model(cfg, std::move(vocab));

  std::vector<PredictFailure> failures;
  const auto preds = model.predict(corpus, {.alpha = 0.23}, &failures);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].sentence_id == 1);
  for (const auto& p : preds) CHECK(p.candidate.sentence_id == 0);
}

TEST_CASE("checkpoints restore an identical model") {
  const auto& tiny = trained_tiny();
  const std::string path = "/tmp/termspan_test_ckpt.json";
  tiny.model->save(path);
  auto loaded = TermExtractionModel::load(path);
  CHECK(loaded->stage1_digest() == tiny.model->stage1_digest());
  CHECK(loaded->stage2_digest() == tiny.model->stage2_digest());
  CHECK(loaded->config().max_span_length == tiny.cfg.max_span_length);

  const auto a = tiny.model->predict(tiny.dev, {.alpha = 0.23});
  const auto b = loaded->predict(tiny.dev, {.alpha = 0.23});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].classifier_prob == b[i].classifier_prob);
    CHECK(a[i].selected == b[i].selected);
  }
  std::remove(path.c_str());
}

TEST_CASE("loading a non-checkpoint fails cleanly") {
  const std::string path = "/tmp/termspan_test_notckpt.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"format\": \"something-else\"}", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(TermExtractionModel::load(path), doctest::Contains("not a termspan"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("config json round-trips") {
  ModelConfig cfg = testing::tiny_config();
  cfg.encoder.use_pos = true;
  cfg.alpha = 0.19;
  cfg.seed = 999;
  const ModelConfig back = model_config_from_json(model_config_to_json(cfg));
  CHECK(back.encoder.use_pos == cfg.encoder.use_pos);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.seed == cfg.seed);
  CHECK(back.encoder.word_dim == cfg.encoder.word_dim);
  CHECK(back.max_span_length == cfg.max_span_length);
}

TEST_CASE("classifier and scorer head gradients match finite differences") {
  ModelConfig cfg = testing::tiny_config(2);
  Vocab vocab = build_vocab({testing::example_sentence()}, 1);
  TermExtractionModel model(cfg, std::move(vocab));

  Rng rng(5);
  Matrix feature(model.feature_dim(), 1);
  for (Index i = 0; i < feature.rows(); ++i) feature(i, 0) = rng.uniform(-1.0, 1.0);

  const auto clf_loss = [&](bool accumulate) {
    ad::Graph g;
    ad::Var logit = model.classifier_logit(g, g.constant(feature));
    ad::Var root = g.bce_with_logit(logit, 1.0);
    const double value = g.value(root)(0, 0);
    if (accumulate) g.backward(root);
    return value;
  };
  std::vector<Parameter*> clf_params;
  for (auto& p : model.stage1_params().all()) {
    if (p->name.rfind("clf.", 0) == 0) clf_params.push_back(p.get());
  }
  auto result = testing::check_gradients(clf_params, clf_loss, 60, 8);
  CHECK(result.max_rel_error < 1e-4);

  const auto scorer_loss = [&](bool accumulate) {
    ad::Graph g;
    ad::Var raw = model.scorer_output(g, g.constant(feature));
    ad::Var root = g.axpb(g.sigmoid(raw), -1.0, 1.0);
    const double value = g.value(root)(0, 0);
    if (accumulate) g.backward(root);
    return value;
  };
  result = testing::check_gradients(model.stage2_params().pointers(), scorer_loss, 60, 9);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("stage two requires positive dev candidates") {
  ModelConfig cfg = trainable_config();
  cfg.stage1_max_epochs = 1;
  cfg.stage2_max_epochs = 1;
  cfg.early_stop = 5;
  // A model that never crosses 0.5: force the classifier output bias very low.
  auto fixture = testing::make_synthetic_corpus(6, 53);
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 4);
  Corpus dev(fixture.corpus.begin() + 4, fixture.corpus.end());
  Vocab vocab = build_vocab(train, 1);
  TermExtractionModel model(cfg, std::move(vocab));
  // One epoch of stage 1 cannot lift probabilities above 0.5 when the output
  // bias starts at -30 (sigmoid ~ 1e-13), so the positive space stays empty.
  model.stage1_params().find("clf.out.b")->value(0, 0) = -30.0;

  CHECK_THROWS_WITH_AS(model.train(train, dev), doctest::Contains("no classifier-positive"),
                       TrainError);
}

TEST_CASE("unfrozen stage two trains the encoder but never the classifier head") {
  ModelConfig cfg = trainable_config();
  cfg.freeze_encoder_stage2 = false;
  cfg.stage2_max_epochs = 3;
  auto fixture = testing::make_synthetic_corpus(14, 59);
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 10);
  Corpus dev(fixture.corpus.begin() + 10, fixture.corpus.end());

  auto run = [&](int stage2_epochs) {
    ModelConfig local = cfg;
    local.stage2_max_epochs = stage2_epochs;
    Vocab vocab = build_vocab(train, 1);
    auto model = std::make_unique<TermExtractionModel>(local, std::move(vocab));
    model->train(train, dev);
    return model;
  };
  auto shorter = run(1);
  auto longer = run(3);

  // Stage one is identical, so any stage-1 digest difference comes from the
  // unfrozen stage-2 updates to encoder and span parameters.
  CHECK(shorter->stage1_digest() != longer->stage1_digest());

  // The classifier head itself stays frozen in both runs.
  for (const auto& p : shorter->stage1_params().all()) {
    if (p->name.rfind("clf.", 0) == 0) {
      const Parameter* other = longer->stage1_params().find(p->name);
      REQUIRE(other != nullptr);
      CHECK(p->value == other->value);
    }
  }
}

TEST_CASE("training with pos features through the concat path works end to end") {
  ModelConfig cfg = trainable_config();
  cfg.encoder.use_pos = true;
  cfg.encoder.pos_dim = 4;
  auto fixture = testing::make_synthetic_corpus(12, 67);  // fixture carries POS tags
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 9);
  Corpus dev(fixture.corpus.begin() + 9, fixture.corpus.end());
  Vocab vocab = build_vocab(train, 1);
  TermExtractionModel model(cfg, std::move(vocab));
  const auto result = model.train(train, dev);
  CHECK(!result.stage2.empty());
  const auto preds = model.predict(dev, {.alpha = 0.23});
  CHECK(!preds.empty());
}

TEST_CASE("non-finite losses abort training with a diagnostic") {
  ModelConfig cfg = trainable_config();
  cfg.stage1_max_epochs = 1;
  auto fixture = testing::make_synthetic_corpus(4, 73);
  Corpus train(fixture.corpus.begin(), fixture.corpus.begin() + 2);
  Corpus dev(fixture.corpus.begin() + 2, fixture.corpus.end());
  Vocab vocab = build_vocab(train, 1);
  TermExtractionModel model(cfg, std::move(vocab));
  model.stage1_params().find("clf.out.b")->value.setConstant(
      std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_WITH_AS(model.train(train, dev), doctest::Contains("non-finite"), TrainError);
}

TEST_CASE("prediction span cap cannot exceed the trained maximum") {
  ModelConfig cfg = testing::tiny_config();
  Vocab vocab = build_vocab({testing::example_sentence()}, 1);
  TermExtractionModel model(cfg, std::move(vocab));
  PredictOptions opts;
  opts.alpha = 0.23;
  opts.max_span_length = cfg.max_span_length + 1;
  CHECK_THROWS_AS(model.predict({testing::example_sentence()}, opts), ConfigError);
}

TEST_CASE("checkpoint version mismatches are rejected") {
  const std::string path = "/tmp/termspan_test_badver.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"format\": \"termspan-checkpoint\", \"version\": 99}", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(TermExtractionModel::load(path),
                       doctest::Contains("unsupported checkpoint version"), std::runtime_error);
  std::remove(path.c_str());
}
