#ifndef TERMSPAN_MODEL_HPP
#define TERMSPAN_MODEL_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "termspan/corpus.hpp"
#include "termspan/encoder.hpp"
#include "termspan/spanrepr.hpp"
#include "termspan/spans.hpp"
#include "termspan/vocab.hpp"

namespace termspan {

struct ModelConfig {
  EncoderConfig encoder;
  int max_span_length = 5;
  int length_dim = 30;
  int head_hidden = 150;  // classifier/scorer MLP width
  int head_depth = 1;     // hidden layers per head
  double alpha = 0.23;
  double learning_rate = 0.01;
  int batch_size = 100;        // sentences per update
  int stage2_batch_size = 0;   // 0: same as batch_size
  int early_stop = 26;         // dev evaluations without improvement
  int stage1_max_epochs = 1000;
  int stage2_max_epochs = 1000;
  std::uint64_t seed = 626;
  int vocab_min_count = 1;
  // Stage two freezes the classifier head always; this also freezes the
  // encoder and span representation parameters (the default).
  bool freeze_encoder_stage2 = true;
  // Seed stage two from the best-dev-recall stage-one checkpoint rather than
  // the best-dev-loss one.
  bool stage2_from_best_recall = true;
  bool count_unreachable_in_recall = true;
  int max_sentence_tokens = 512;

  void validate() const;
};

struct Prediction {
  SpanCandidate candidate;
  double classifier_prob = 0.0;
  std::optional<double> rank_score;  // present iff classified positive
  bool selected = false;
};

// K = floor(alpha * total_words); the K best-scored positives win, ties
// broken by (sentence_id, start, end). Returns K.
std::int64_t rank_topk(std::vector<Prediction>& predictions, std::int64_t total_words,
                       double alpha);

// Mean binary cross-entropy over candidates; probabilities clamped to
// [1e-7, 1 - 1e-7] before the logs.
double classification_loss(const std::vector<double>& probabilities,
                           const std::vector<bool>& labels);

struct RankingLossValue {
  double loss = 0.0;
  bool gold_empty = false;
  bool nongold_empty = false;
};

// Mean (1 - sigmoid) over gold raw scores plus mean sigmoid over non-gold raw
// scores. An empty group contributes zero and is flagged.
RankingLossValue ranking_loss(const std::vector<double>& gold_raw,
                              const std::vector<double>& nongold_raw);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_recall = 0.0;  // stage one only
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochRecord> stage1;
  std::vector<EpochRecord> stage2;
  int stage1_best_epoch = 0;
  int stage2_best_epoch = 0;
  double stage1_best_dev_loss = 0.0;
  double stage1_best_dev_recall = 0.0;
  double stage2_best_dev_loss = 0.0;
  std::int64_t empty_gold_batches = 0;     // ranking-loss groups that came up empty
  std::int64_t empty_nongold_batches = 0;
  // Stage-one parameter digests around stage two; equal when the freeze held.
  std::string stage1_digest_before_stage2;
  std::string stage1_digest_after_stage2;
};

struct PredictOptions {
  double alpha = 0.23;
  int max_span_length = 0;  // 0: model default; smaller value restricts candidates
};

struct PredictFailure {
  int sentence_id = 0;
  std::string message;
};

// End-to-end model: encoder, span representation, classifier head (stage
// one) and scorer head (stage two).
class TermExtractionModel {
 public:
  TermExtractionModel(const ModelConfig& cfg, Vocab vocab);

  // The encoder keeps references into the model; it stays where it was built.
  TermExtractionModel(const TermExtractionModel&) = delete;
  TermExtractionModel& operator=(const TermExtractionModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  ParameterStore& stage1_params() { return stage1_; }
  ParameterStore& stage2_params() { return stage2_; }
  Parameter& word_embedding() { return encoder_->word_embedding(); }

  std::string stage1_digest() const { return stage1_.digest(); }
  std::string stage2_digest() const { return stage2_.digest(); }

  // Two-stage optimization. progress, when set, receives one line per epoch.
  TrainResult train(const Corpus& train, const Corpus& dev,
                    const std::function<void(const std::string&)>& progress = nullptr);

  std::vector<Prediction> predict(const Corpus& sentences, const PredictOptions& opts,
                                  std::vector<PredictFailure>* failures = nullptr) const;

  // Single-candidate forward passes used by tests and inspection tools.
  double classifier_probability(ad::Graph& g, ad::Var feature) const;
  double scorer_raw(ad::Graph& g, ad::Var feature) const;

  SentenceHiddens encode_sentence(ad::Graph& g, const AnnotatedSentence& sentence) const {
    return encoder_->encode(g, sentence);
  }
  ad::Var span_feature(ad::Graph& g, const SpanCandidate& cand, const SentenceHiddens& hiddens,
                       std::vector<SpanAttention>* attention = nullptr) const {
    return repr_->build(g, cand, hiddens, attention);
  }
  std::vector<ad::Var> span_features(ad::Graph& g, const std::vector<SpanCandidate>& candidates,
                                     const SentenceHiddens& hiddens) const {
    return repr_->build_all(g, candidates, hiddens);
  }
  ad::Var classifier_logit(ad::Graph& g, ad::Var feature) const;
  ad::Var scorer_output(ad::Graph& g, ad::Var feature) const;
  // Batched heads: features as columns, logits as a 1xC row.
  ad::Var classifier_logits(ad::Graph& g, ad::Var features) const;
  ad::Var scorer_outputs(ad::Graph& g, ad::Var features) const;
  int feature_dim() const { return repr_->feature_dim(); }

  void save(const std::string& path) const;
  static std::unique_ptr<TermExtractionModel> load(const std::string& path);

 private:
  struct Head {
    std::vector<Parameter*> weights;
    std::vector<Parameter*> biases;
    Parameter* out_weight = nullptr;
    Parameter* out_bias = nullptr;
  };

  Head add_head(ParameterStore& store, Rng& rng, const std::string& prefix);
  ad::Var head_forward(ad::Graph& g, const Head& head, ad::Var x) const;

  struct CachedPositive {
    Vector feature;
    bool is_term = false;
  };

  double run_stage1_batch(const Corpus& corpus, const std::vector<std::size_t>& batch,
                          AdamOptimizer& opt, Rng& dropout_rng);
  std::pair<double, double> stage1_dev_metrics(const Corpus& dev) const;
  std::vector<std::vector<CachedPositive>> collect_positives(const Corpus& corpus) const;
  void train_stage2(const Corpus& train, const Corpus& dev, TrainResult& result, Rng& train_rng,
                    const std::function<void(const std::string&)>& progress);
  std::vector<Parameter*> stage2_trainable() const;

  ModelConfig cfg_;
  Vocab vocab_;
  ParameterStore stage1_;
  ParameterStore stage2_;
  std::size_t encoder_param_count_ = 0;
  std::size_t repr_param_count_ = 0;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<SpanReprBuilder> repr_;
  Head classifier_;
  Head scorer_;
};

}  // namespace termspan

#endif  // TERMSPAN_MODEL_HPP
