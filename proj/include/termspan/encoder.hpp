#ifndef TERMSPAN_ENCODER_HPP
#define TERMSPAN_ENCODER_HPP

#include <string>
#include <vector>

#include "termspan/corpus.hpp"
#include "termspan/graph.hpp"
#include "termspan/vocab.hpp"

namespace termspan {

struct EncoderConfig {
  int word_dim = 150;
  int char_dim = 30;
  int char_window = 3;
  int char_filters = 50;
  int lstm_hidden = 150;  // per direction
  int lstm_layers = 2;
  double dropout = 0.6;
  bool lowercase_words = true;

  bool use_pos = false;
  int pos_dim = 30;
  // POS features either join the word-level input (default) or run through
  // their own recurrent pipeline and contribute a separate feature source.
  bool pos_own_pipeline = false;
  int pos_lstm_layers = 1;
  int pos_lstm_hidden = 30;

  bool use_external = false;
  int external_dim = 0;
  bool external_own_pipeline = false;
  int external_lstm_layers = 0;  // 0: raw vectors form the source directly
  int external_lstm_hidden = 75;

  int hidden_dim() const { return 2 * lstm_hidden; }
  void validate() const;
};

// Per-token hiddens of one feature source: the raw sequence features, the
// terminology-attended features, and the attention distribution over tokens.
struct SourceHiddens {
  ad::Var hiddens;   // dim x n
  ad::Var attended;  // dim x n, column i scaled by weights[i]
  ad::Var weights;   // n x 1, non-negative, sums to 1
  int dim = 0;
  std::string name;
};

struct SentenceHiddens {
  int num_tokens = 0;
  std::vector<SourceHiddens> sources;  // [0] is the word/char source

  const SourceHiddens& base() const { return sources.front(); }
};

// Character CNN + word embedding + bidirectional LSTM stack, followed by a
// learned attention query that reweights each token's hidden features.
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, const Vocab& vocab, ParameterStore& store, Rng& rng);

  SentenceHiddens encode(ad::Graph& g, const AnnotatedSentence& sentence) const;

  // Feature-source widths in the order encode() emits them.
  std::vector<int> source_dims() const;

  Parameter& word_embedding() { return *word_emb_; }
  const EncoderConfig& config() const { return cfg_; }

 private:
  struct LstmDir {
    Parameter* weight = nullptr;  // 4h x (input + h)
    Parameter* bias = nullptr;    // 4h
    int hidden = 0;
  };
  struct LstmLayer {
    LstmDir fwd;
    LstmDir bwd;
  };

  LstmLayer add_lstm_layer(ParameterStore& store, Rng& rng, const std::string& prefix,
                           int input_dim, int hidden);
  std::vector<ad::Var> run_lstm(ad::Graph& g, const LstmDir& dir,
                                const std::vector<ad::Var>& inputs, bool reverse) const;
  std::vector<ad::Var> run_bilstm_stack(ad::Graph& g, const std::vector<LstmLayer>& layers,
                                        std::vector<ad::Var> inputs) const;
  ad::Var char_feature(ad::Graph& g, const std::string& token) const;
  SourceHiddens attend(ad::Graph& g, ad::Var hiddens, Parameter& query, int dim,
                       const std::string& name) const;

  EncoderConfig cfg_;
  const Vocab* vocab_;

  Parameter* char_emb_ = nullptr;
  Parameter* conv_filters_ = nullptr;
  Parameter* conv_bias_ = nullptr;
  Parameter* word_emb_ = nullptr;
  Parameter* pos_emb_ = nullptr;
  std::vector<LstmLayer> word_lstm_;
  Parameter* base_query_ = nullptr;  // attention target vector of the base source

  std::vector<LstmLayer> pos_lstm_;
  Parameter* pos_query_ = nullptr;
  std::vector<LstmLayer> external_lstm_;
  Parameter* external_query_ = nullptr;
};

}  // namespace termspan

#endif  // TERMSPAN_ENCODER_HPP
