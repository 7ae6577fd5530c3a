#include "termspan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace termspan {

void ModelConfig::validate() const {
  encoder.validate();
  if (max_span_length < 1) throw ConfigError("max span length must be >= 1");
  if (length_dim < 1) throw ConfigError("length embedding dimension must be >= 1");
  if (head_hidden < 1 || head_depth < 0) throw ConfigError("invalid head shape");
  if (alpha <= 0.0) throw ConfigError("term ratio alpha must be > 0");
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (early_stop < 1) throw ConfigError("early stop patience must be >= 1");
  if (max_sentence_tokens < 1) throw ConfigError("sentence length cap must be >= 1");
}

std::int64_t rank_topk(std::vector<Prediction>& predictions, std::int64_t total_words,
                       double alpha) {
  if (alpha <= 0.0) throw ConfigError("term ratio alpha must be > 0");
  if (total_words < 0) throw ConfigError("total word count must be >= 0");
  const auto k = static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(total_words)));

  std::vector<std::size_t> scored;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    predictions[i].selected = false;
    if (predictions[i].rank_score.has_value()) scored.push_back(i);
  }
  std::sort(scored.begin(), scored.end(), [&](std::size_t a, std::size_t b) {
    const double sa = *predictions[a].rank_score;
    const double sb = *predictions[b].rank_score;
    if (sa != sb) return sa > sb;
    return predictions[a].candidate < predictions[b].candidate;
  });
  const auto take = std::min<std::int64_t>(k, static_cast<std::int64_t>(scored.size()));
  for (std::int64_t i = 0; i < take; ++i) predictions[scored[static_cast<std::size_t>(i)]].selected = true;
  return k;
}

double classification_loss(const std::vector<double>& probabilities,
                           const std::vector<bool>& labels) {
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("probability/label size mismatch");
  }
  if (probabilities.empty()) return 0.0;
  constexpr double eps = 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], eps, 1.0 - eps);
    total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(probabilities.size());
}

RankingLossValue ranking_loss(const std::vector<double>& gold_raw,
                              const std::vector<double>& nongold_raw) {
  RankingLossValue out;
  if (gold_raw.empty()) {
    out.gold_empty = true;
  } else {
    double sum = 0.0;
    for (double y : gold_raw) sum += 1.0 - sigmoid(y);
    out.loss += sum / static_cast<double>(gold_raw.size());
  }
  if (nongold_raw.empty()) {
    out.nongold_empty = true;
  } else {
    double sum = 0.0;
    for (double y : nongold_raw) sum += sigmoid(y);
    out.loss += sum / static_cast<double>(nongold_raw.size());
  }
  return out;
}

TermExtractionModel::TermExtractionModel(const ModelConfig& cfg, Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  encoder_ = std::make_unique<Encoder>(cfg_.encoder, vocab_, stage1_, rng);
  encoder_param_count_ = stage1_.count();
  repr_ = std::make_unique<SpanReprBuilder>(cfg_.max_span_length, cfg_.length_dim,
                                            encoder_->source_dims(), stage1_, rng);
  repr_param_count_ = stage1_.count() - encoder_param_count_;
  classifier_ = add_head(stage1_, rng, "clf");
  scorer_ = add_head(stage2_, rng, "score");
}

TermExtractionModel::Head TermExtractionModel::add_head(ParameterStore& store, Rng& rng,
                                                        const std::string& prefix) {
  Head head;
  int in = repr_->feature_dim();
  for (int layer = 0; layer < cfg_.head_depth; ++layer) {
    Parameter& w = store.add(prefix + ".l" + std::to_string(layer) + ".W", cfg_.head_hidden, in);
    init_glorot(w, rng);
    Parameter& b = store.add(prefix + ".l" + std::to_string(layer) + ".b", cfg_.head_hidden, 1);
    head.weights.push_back(&w);
    head.biases.push_back(&b);
    in = cfg_.head_hidden;
  }
  head.out_weight = &store.add(prefix + ".out.W", 1, in);
  init_glorot(*head.out_weight, rng);
  head.out_bias = &store.add(prefix + ".out.b", 1, 1);
  return head;
}

ad::Var TermExtractionModel::head_forward(ad::Graph& g, const Head& head, ad::Var x) const {
  for (std::size_t layer = 0; layer < head.weights.size(); ++layer) {
    x = g.tanh(g.affine(g.param(*head.weights[layer]), x, g.param(*head.biases[layer])));
  }
  return g.affine(g.param(*head.out_weight), x, g.param(*head.out_bias));
}

ad::Var TermExtractionModel::classifier_logit(ad::Graph& g, ad::Var feature) const {
  return head_forward(g, classifier_, feature);
}

ad::Var TermExtractionModel::scorer_output(ad::Graph& g, ad::Var feature) const {
  return head_forward(g, scorer_, feature);
}

ad::Var TermExtractionModel::classifier_logits(ad::Graph& g, ad::Var features) const {
  return head_forward(g, classifier_, features);
}

ad::Var TermExtractionModel::scorer_outputs(ad::Graph& g, ad::Var features) const {
  return head_forward(g, scorer_, features);
}

double TermExtractionModel::classifier_probability(ad::Graph& g, ad::Var feature) const {
  return sigmoid(g.value(classifier_logit(g, feature))(0, 0));
}

double TermExtractionModel::scorer_raw(ad::Graph& g, ad::Var feature) const {
  return g.value(scorer_output(g, feature))(0, 0);
}

namespace {

// Batches are sentence index groups in shuffled order.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   int batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  for (std::size_t idx : order) {
    current.push_back(idx);
    if (static_cast<int>(current.size()) == batch_size) {
      batches.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

double check_finite(double loss, const std::string& where) {
  if (!std::isfinite(loss)) {
    throw TrainError("training diverged: non-finite loss in " + where);
  }
  return loss;
}

}  // namespace

double TermExtractionModel::run_stage1_batch(const Corpus& corpus,
                                             const std::vector<std::size_t>& batch,
                                             AdamOptimizer& opt, Rng& dropout_rng) {
  ad::Graph g(true, &dropout_rng);
  std::vector<ad::Var> logit_rows;
  std::vector<double> labels;
  for (std::size_t idx : batch) {
    const AnnotatedSentence& sent = corpus[idx];
    const SentenceHiddens hiddens = encoder_->encode(g, sent);
    const auto candidates = enumerate_spans(sent, static_cast<int>(idx), cfg_.max_span_length);
    logit_rows.push_back(classifier_logits(g, g.hstack(repr_->build_all(g, candidates, hiddens))));
    for (const auto& lc : label_candidates(candidates, sent.gold_spans)) {
      labels.push_back(lc.is_term ? 1.0 : 0.0);
    }
  }
  if (labels.empty()) return 0.0;
  ad::Var loss = g.bce_with_logits_mean(g.hstack(logit_rows), std::move(labels));
  const double value = check_finite(g.value(loss)(0, 0), "stage one");
  g.backward(loss);
  opt.step();
  return value;
}

std::pair<double, double> TermExtractionModel::stage1_dev_metrics(const Corpus& dev) const {
  std::vector<double> probs;
  std::vector<bool> labels;
  std::int64_t true_positive = 0;
  std::int64_t gold_total = 0;
  for (std::size_t s = 0; s < dev.size(); ++s) {
    const auto& sent = dev[s];
    gold_total += cfg_.count_unreachable_in_recall
                      ? static_cast<std::int64_t>(sent.gold_spans.size())
                      : std::count_if(sent.gold_spans.begin(), sent.gold_spans.end(),
                                      [&](const GoldSpan& gs) {
                                        return gs.second - gs.first + 1 <= cfg_.max_span_length;
                                      });
    ad::Graph g(false);
    const SentenceHiddens hiddens = encoder_->encode(g, sent);
    const auto candidates = enumerate_spans(sent, static_cast<int>(s), cfg_.max_span_length);
    const ad::Var logits =
        classifier_logits(g, g.hstack(repr_->build_all(g, candidates, hiddens)));
    const auto labeled = label_candidates(candidates, sent.gold_spans);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      const double p = sigmoid(g.value(logits)(0, static_cast<Index>(i)));
      probs.push_back(p);
      labels.push_back(labeled[i].is_term);
      if (labeled[i].is_term && p > 0.5) ++true_positive;
    }
  }
  const double loss = classification_loss(probs, labels);
  const double recall =
      gold_total > 0 ? static_cast<double>(true_positive) / static_cast<double>(gold_total) : 0.0;
  return {loss, recall};
}

namespace {

Corpus filter_by_length(const Corpus& corpus, int cap, std::size_t* dropped) {
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& sent : corpus) {
    if (static_cast<int>(sent.tokens.size()) <= cap) {
      out.push_back(sent);
    } else if (dropped != nullptr) {
      ++(*dropped);
    }
  }
  return out;
}

}  // namespace

TrainResult TermExtractionModel::train(const Corpus& train_in, const Corpus& dev_in,
                                       const std::function<void(const std::string&)>& progress) {
  auto report = [&](const std::string& line) {
    if (progress) progress(line);
  };
  std::size_t dropped = 0;
  const Corpus train = filter_by_length(train_in, cfg_.max_sentence_tokens, &dropped);
  const Corpus dev = filter_by_length(dev_in, cfg_.max_sentence_tokens, &dropped);
  if (dropped > 0) {
    report("dropped " + std::to_string(dropped) + " sentences over the length cap of " +
           std::to_string(cfg_.max_sentence_tokens));
  }
  if (train.empty()) throw TrainError("training split is empty");
  if (dev.empty()) throw TrainError("development split is empty");

  TrainResult result;
  Rng train_rng(cfg_.seed ^ 0x9e3779b97f4a7c15ull);

  // Stage one: encoder + span representation + classifier.
  AdamOptimizer opt1(stage1_.pointers(), AdamConfig{.learning_rate = cfg_.learning_rate});
  std::vector<Matrix> best_loss_snapshot = stage1_.snapshot();
  std::vector<Matrix> best_recall_snapshot = best_loss_snapshot;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_recall = -1.0;
  int best_loss_epoch = 0;
  int patience = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg_.stage1_max_epochs; ++epoch) {
    train_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (const auto& batch : make_batches(order, cfg_.batch_size)) {
      epoch_loss += run_stage1_batch(train, batch, opt1, train_rng);
      ++batches;
    }
    epoch_loss /= std::max(1, batches);

    const auto [dev_loss, dev_recall] = stage1_dev_metrics(dev);
    EpochRecord record{epoch, epoch_loss, dev_loss, dev_recall, false};
    if (dev_loss < best_loss) {
      best_loss = dev_loss;
      best_loss_epoch = epoch;
      best_loss_snapshot = stage1_.snapshot();
      patience = 0;
      record.improved = true;
    } else {
      ++patience;
    }
    if (dev_recall > best_recall) {
      best_recall = dev_recall;
      best_recall_snapshot = stage1_.snapshot();
    }
    result.stage1.push_back(record);
    report("stage1 epoch " + std::to_string(epoch) + ": train_loss=" + std::to_string(epoch_loss) +
           " dev_loss=" + std::to_string(dev_loss) + " dev_recall=" + std::to_string(dev_recall) +
           (record.improved ? " *" : ""));
    if (patience >= cfg_.early_stop) break;
  }
  result.stage1_best_epoch = best_loss_epoch;
  result.stage1_best_dev_loss = best_loss;
  result.stage1_best_dev_recall = best_recall;
  stage1_.restore(cfg_.stage2_from_best_recall ? best_recall_snapshot : best_loss_snapshot);
  stage1_.zero_grads();

  // Stage two: ranking scorer on the classifier-positive space.
  result.stage1_digest_before_stage2 = stage1_.digest();
  train_stage2(train, dev, result, train_rng, progress);
  result.stage1_digest_after_stage2 = stage1_.digest();
  return result;
}

std::vector<std::vector<TermExtractionModel::CachedPositive>>
TermExtractionModel::collect_positives(const Corpus& corpus) const {
  std::vector<std::vector<CachedPositive>> out(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& sent = corpus[s];
    ad::Graph g(false);
    const SentenceHiddens hiddens = encoder_->encode(g, sent);
    const auto candidates = enumerate_spans(sent, static_cast<int>(s), cfg_.max_span_length);
    const auto features = repr_->build_all(g, candidates, hiddens);
    const ad::Var logits = classifier_logits(g, g.hstack(features));
    const auto labeled = label_candidates(candidates, sent.gold_spans);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      if (sigmoid(g.value(logits)(0, static_cast<Index>(i))) > 0.5) {
        out[s].push_back({g.value(features[i]).col(0), labeled[i].is_term});
      }
    }
  }
  return out;
}

std::vector<Parameter*> TermExtractionModel::stage2_trainable() const {
  std::vector<Parameter*> params = stage2_.pointers();
  if (!cfg_.freeze_encoder_stage2) {
    // The classifier head stays frozen either way; only encoder and span
    // representation parameters may keep adapting.
    const auto stage1_ptrs = stage1_.pointers();
    for (std::size_t i = 0; i < encoder_param_count_ + repr_param_count_; ++i) {
      params.push_back(stage1_ptrs[i]);
    }
  }
  return params;
}

void TermExtractionModel::train_stage2(const Corpus& train, const Corpus& dev, TrainResult& result,
                                       Rng& train_rng,
                                       const std::function<void(const std::string&)>& progress) {
  auto report = [&](const std::string& line) {
    if (progress) progress(line);
  };
  AdamOptimizer opt2(stage2_trainable(), AdamConfig{.learning_rate = cfg_.learning_rate});

  const bool frozen = cfg_.freeze_encoder_stage2;
  std::vector<std::vector<CachedPositive>> train_cache;
  std::vector<std::vector<CachedPositive>> dev_cache;
  if (frozen) {
    train_cache = collect_positives(train);
    dev_cache = collect_positives(dev);
    const auto count = [](const std::vector<std::vector<CachedPositive>>& cache) {
      std::size_t n = 0;
      for (const auto& v : cache) n += v.size();
      return n;
    };
    if (count(train_cache) == 0) {
      throw TrainError("stage two found no classifier-positive train candidates; "
                       "train stage one longer");
    }
    if (count(dev_cache) == 0) {
      throw TrainError("stage two found no classifier-positive dev candidates; "
                       "train stage one longer");
    }
  }

  auto raw_scores_of = [&](const std::vector<std::vector<CachedPositive>>& cache,
                           std::vector<double>& gold_raw, std::vector<double>& nongold_raw) {
    std::vector<const CachedPositive*> items;
    for (const auto& per_sentence : cache) {
      for (const auto& item : per_sentence) items.push_back(&item);
    }
    if (items.empty()) return;
    ad::Graph g(false);
    Matrix features(items.front()->feature.size(), static_cast<Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
      features.col(static_cast<Index>(i)) = items[i]->feature;
    }
    const ad::Var raws = scorer_outputs(g, g.constant(std::move(features)));
    for (std::size_t i = 0; i < items.size(); ++i) {
      const double raw = g.value(raws)(0, static_cast<Index>(i));
      (items[i]->is_term ? gold_raw : nongold_raw).push_back(raw);
    }
  };

  auto dev_ranking_loss = [&]() -> double {
    std::vector<double> gold_raw;
    std::vector<double> nongold_raw;
    raw_scores_of(frozen ? dev_cache : collect_positives(dev), gold_raw, nongold_raw);
    if (gold_raw.empty() && nongold_raw.empty()) {
      throw TrainError("stage two found no classifier-positive dev candidates; "
                       "train stage one longer");
    }
    return ranking_loss(gold_raw, nongold_raw).loss;
  };

  std::vector<Matrix> best_snapshot = stage2_.snapshot();
  // When the encoder keeps training in stage two, its weights are part of the
  // checkpointed state as well.
  std::vector<Matrix> best_stage1_snapshot;
  if (!frozen) best_stage1_snapshot = stage1_.snapshot();
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int patience = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int batch_size = cfg_.stage2_batch_size > 0 ? cfg_.stage2_batch_size : cfg_.batch_size;

  for (int epoch = 1; epoch <= cfg_.stage2_max_epochs; ++epoch) {
    train_rng.shuffle(order);
    double epoch_loss = 0.0;
    int counted_batches = 0;
    for (const auto& batch : make_batches(order, batch_size)) {
      ad::Graph g(true, &train_rng);
      std::vector<ad::Var> gold_features;
      std::vector<ad::Var> nongold_features;
      for (std::size_t idx : batch) {
        if (frozen) {
          for (const auto& cached : train_cache[idx]) {
            (cached.is_term ? gold_features : nongold_features)
                .push_back(g.constant(cached.feature));
          }
        } else {
          const AnnotatedSentence& sent = train[idx];
          const SentenceHiddens hiddens = encoder_->encode(g, sent);
          const auto candidates = enumerate_spans(sent, static_cast<int>(idx), cfg_.max_span_length);
          const auto features = repr_->build_all(g, candidates, hiddens);
          const ad::Var logits = classifier_logits(g, g.hstack(features));
          const auto labeled = label_candidates(candidates, sent.gold_spans);
          for (std::size_t i = 0; i < labeled.size(); ++i) {
            if (sigmoid(g.value(logits)(0, static_cast<Index>(i))) > 0.5) {
              (labeled[i].is_term ? gold_features : nongold_features).push_back(features[i]);
            }
          }
        }
      }
      if (gold_features.empty()) ++result.empty_gold_batches;
      if (nongold_features.empty()) ++result.empty_nongold_batches;
      if (gold_features.empty() && nongold_features.empty()) continue;

      ad::Var loss{-1};
      if (!gold_features.empty()) {
        ad::Var raws = scorer_outputs(g, g.hstack(gold_features));
        loss = g.axpb(g.mean_all(g.sigmoid(raws)), -1.0, 1.0);
      }
      if (!nongold_features.empty()) {
        ad::Var raws = scorer_outputs(g, g.hstack(nongold_features));
        ad::Var nongold_term = g.mean_all(g.sigmoid(raws));
        loss = loss.valid() ? g.add(loss, nongold_term) : nongold_term;
      }
      epoch_loss += check_finite(g.value(loss)(0, 0), "stage two");
      ++counted_batches;
      g.backward(loss);
      opt2.step();
    }
    epoch_loss /= std::max(1, counted_batches);

    const double dev_loss = dev_ranking_loss();
    EpochRecord record{epoch, epoch_loss, dev_loss, 0.0, false};
    if (dev_loss < best_loss) {
      best_loss = dev_loss;
      best_epoch = epoch;
      best_snapshot = stage2_.snapshot();
      if (!frozen) best_stage1_snapshot = stage1_.snapshot();
      patience = 0;
      record.improved = true;
    } else {
      ++patience;
    }
    result.stage2.push_back(record);
    report("stage2 epoch " + std::to_string(epoch) + ": train_loss=" + std::to_string(epoch_loss) +
           " dev_loss=" + std::to_string(dev_loss) + (record.improved ? " *" : ""));
    if (patience >= cfg_.early_stop) break;
  }
  result.stage2_best_epoch = best_epoch;
  result.stage2_best_dev_loss = best_loss;
  stage2_.restore(best_snapshot);
  if (!frozen) stage1_.restore(best_stage1_snapshot);
  stage2_.zero_grads();
  stage1_.zero_grads();
}

std::vector<Prediction> TermExtractionModel::predict(const Corpus& sentences,
                                                     const PredictOptions& opts,
                                                     std::vector<PredictFailure>* failures) const {
  int k = opts.max_span_length > 0 ? opts.max_span_length : cfg_.max_span_length;
  if (k > cfg_.max_span_length) {
    throw ConfigError("prediction max span length exceeds the model's trained maximum");
  }
  std::vector<Prediction> predictions;
  std::int64_t total_words = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    if (static_cast<int>(sent.tokens.size()) > cfg_.max_sentence_tokens) {
      if (failures != nullptr) {
        failures->push_back({static_cast<int>(s),
                             "sentence exceeds the length cap of " +
                                 std::to_string(cfg_.max_sentence_tokens) + " tokens"});
      }
      continue;
    }
    total_words += static_cast<std::int64_t>(sent.tokens.size());
    ad::Graph g(false);
    const SentenceHiddens hiddens = encoder_->encode(g, sent);
    const auto candidates = enumerate_spans(sent, static_cast<int>(s), k);
    const auto features = repr_->build_all(g, candidates, hiddens);
    const ad::Var logits = classifier_logits(g, g.hstack(features));

    std::vector<std::size_t> positive_at;
    std::vector<ad::Var> positive_features;
    std::vector<Prediction> sentence_preds(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      sentence_preds[i].candidate = candidates[i];
      sentence_preds[i].classifier_prob = sigmoid(g.value(logits)(0, static_cast<Index>(i)));
      if (sentence_preds[i].classifier_prob > 0.5) {
        positive_at.push_back(i);
        positive_features.push_back(features[i]);
      }
    }
    if (!positive_at.empty()) {
      const ad::Var raws = scorer_outputs(g, g.hstack(positive_features));
      for (std::size_t p = 0; p < positive_at.size(); ++p) {
        sentence_preds[positive_at[p]].rank_score =
            sigmoid(g.value(raws)(0, static_cast<Index>(p)));
      }
    }
    for (auto& pred : sentence_preds) predictions.push_back(std::move(pred));
  }
  rank_topk(predictions, total_words, opts.alpha);
  return predictions;
}

}  // namespace termspan
