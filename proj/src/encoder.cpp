#include "termspan/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace termspan {

void EncoderConfig::validate() const {
  if (word_dim < 1 || char_dim < 1 || char_window < 1 || char_filters < 1 || lstm_hidden < 1 ||
      lstm_layers < 1) {
    throw ConfigError("encoder dimensions must be >= 1");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (use_pos && pos_dim < 1) throw ConfigError("pos embedding dimension must be >= 1");
  if (use_external && external_dim < 1) {
    throw ConfigError("external vector dimension must be configured when the source is enabled");
  }
}

Encoder::Encoder(const EncoderConfig& cfg, const Vocab& vocab, ParameterStore& store, Rng& rng)
    : cfg_(cfg), vocab_(&vocab) {
  cfg_.validate();

  char_emb_ = &store.add("enc.char_emb", cfg_.char_dim, vocab.num_chars());
  init_uniform(*char_emb_, rng, 0.1);
  conv_filters_ = &store.add("enc.char_conv.W", cfg_.char_filters, cfg_.char_dim * cfg_.char_window);
  init_glorot(*conv_filters_, rng);
  conv_bias_ = &store.add("enc.char_conv.b", cfg_.char_filters, 1);

  word_emb_ = &store.add("enc.word_emb", cfg_.word_dim, vocab.num_words());
  init_uniform(*word_emb_, rng, 0.1);

  int input_dim = cfg_.char_filters + cfg_.word_dim;
  if (cfg_.use_pos && !cfg_.pos_own_pipeline) input_dim += cfg_.pos_dim;
  if (cfg_.use_external && !cfg_.external_own_pipeline) input_dim += cfg_.external_dim;

  if (cfg_.use_pos) {
    pos_emb_ = &store.add("enc.pos_emb", cfg_.pos_dim, vocab.num_pos());
    init_uniform(*pos_emb_, rng, 0.1);
  }

  for (int layer = 0; layer < cfg_.lstm_layers; ++layer) {
    const int in = layer == 0 ? input_dim : 2 * cfg_.lstm_hidden;
    word_lstm_.push_back(
        add_lstm_layer(store, rng, "enc.word_lstm.l" + std::to_string(layer), in, cfg_.lstm_hidden));
  }
  base_query_ = &store.add("enc.base_query", 2 * cfg_.lstm_hidden, 1);
  init_uniform(*base_query_, rng, 0.1);

  if (cfg_.use_pos && cfg_.pos_own_pipeline) {
    for (int layer = 0; layer < cfg_.pos_lstm_layers; ++layer) {
      const int in = layer == 0 ? cfg_.pos_dim : 2 * cfg_.pos_lstm_hidden;
      pos_lstm_.push_back(
          add_lstm_layer(store, rng, "enc.pos_lstm.l" + std::to_string(layer), in, cfg_.pos_lstm_hidden));
    }
    pos_query_ = &store.add("enc.pos_query", 2 * cfg_.pos_lstm_hidden, 1);
    init_uniform(*pos_query_, rng, 0.1);
  }
  if (cfg_.use_external && cfg_.external_own_pipeline) {
    for (int layer = 0; layer < cfg_.external_lstm_layers; ++layer) {
      const int in = layer == 0 ? cfg_.external_dim : 2 * cfg_.external_lstm_hidden;
      external_lstm_.push_back(add_lstm_layer(store, rng, "enc.ext_lstm.l" + std::to_string(layer), in,
                                              cfg_.external_lstm_hidden));
    }
    const int ext_out = cfg_.external_lstm_layers > 0 ? 2 * cfg_.external_lstm_hidden : cfg_.external_dim;
    external_query_ = &store.add("enc.ext_query", ext_out, 1);
    init_uniform(*external_query_, rng, 0.1);
  }
}

std::vector<int> Encoder::source_dims() const {
  std::vector<int> dims = {2 * cfg_.lstm_hidden};
  if (cfg_.use_pos && cfg_.pos_own_pipeline) dims.push_back(2 * cfg_.pos_lstm_hidden);
  if (cfg_.use_external && cfg_.external_own_pipeline) {
    dims.push_back(cfg_.external_lstm_layers > 0 ? 2 * cfg_.external_lstm_hidden : cfg_.external_dim);
  }
  return dims;
}

Encoder::LstmLayer Encoder::add_lstm_layer(ParameterStore& store, Rng& rng,
                                           const std::string& prefix, int input_dim, int hidden) {
  LstmLayer layer;
  for (const char* dir : {"fwd", "bwd"}) {
    LstmDir d;
    d.hidden = hidden;
    d.weight = &store.add(prefix + "." + dir + ".W", 4 * hidden, input_dim + hidden);
    init_glorot(*d.weight, rng);
    d.bias = &store.add(prefix + "." + dir + ".b", 4 * hidden, 1);
    // Forget gate bias starts positive so memory persists early in training.
    d.bias->value.middleRows(hidden, hidden).setOnes();
    (std::string(dir) == "fwd" ? layer.fwd : layer.bwd) = d;
  }
  return layer;
}

std::vector<ad::Var> Encoder::run_lstm(ad::Graph& g, const LstmDir& dir,
                                       const std::vector<ad::Var>& inputs, bool reverse) const {
  const int n = static_cast<int>(inputs.size());
  const int h = dir.hidden;
  ad::Var weight = g.param(*dir.weight);
  ad::Var bias = g.param(*dir.bias);
  ad::Var state_h = g.constant(Matrix::Zero(h, 1));
  ad::Var state_c = g.constant(Matrix::Zero(h, 1));

  std::vector<ad::Var> outputs(inputs.size());
  for (int step = 0; step < n; ++step) {
    const int t = reverse ? n - 1 - step : step;
    ad::Var gates = g.affine(weight, g.concat_rows({inputs[t], state_h}), bias);
    ad::Var in_gate = g.sigmoid(g.slice_rows(gates, 0, h));
    ad::Var forget_gate = g.sigmoid(g.slice_rows(gates, h, h));
    ad::Var out_gate = g.sigmoid(g.slice_rows(gates, 2 * h, h));
    ad::Var candidate = g.tanh(g.slice_rows(gates, 3 * h, h));
    state_c = g.add(g.cmul(forget_gate, state_c), g.cmul(in_gate, candidate));
    state_h = g.cmul(out_gate, g.tanh(state_c));
    outputs[t] = state_h;
  }
  return outputs;
}

std::vector<ad::Var> Encoder::run_bilstm_stack(ad::Graph& g, const std::vector<LstmLayer>& layers,
                                               std::vector<ad::Var> inputs) const {
  for (const auto& layer : layers) {
    const auto fwd = run_lstm(g, layer.fwd, inputs, false);
    const auto bwd = run_lstm(g, layer.bwd, inputs, true);
    std::vector<ad::Var> outputs(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      outputs[i] = g.dropout(g.concat_rows({fwd[i], bwd[i]}), cfg_.dropout);
    }
    inputs = std::move(outputs);
  }
  return inputs;
}

ad::Var Encoder::char_feature(ad::Graph& g, const std::string& token) const {
  const int window = cfg_.char_window;
  std::vector<int> ids;
  ids.reserve(token.size());
  for (unsigned char c : token) ids.push_back(vocab_->char_id(c));
  while (static_cast<int>(ids.size()) < window) ids.push_back(Vocab::kPad);

  std::vector<ad::Var> char_vecs;
  char_vecs.reserve(ids.size());
  for (int id : ids) char_vecs.push_back(g.lookup(*char_emb_, id));

  const int num_windows = static_cast<int>(ids.size()) - window + 1;
  std::vector<ad::Var> windows;
  windows.reserve(num_windows);
  for (int t = 0; t < num_windows; ++t) {
    windows.push_back(g.concat_rows({char_vecs.begin() + t, char_vecs.begin() + t + window}));
  }
  ad::Var conv = g.affine(g.param(*conv_filters_), g.hstack(windows), g.param(*conv_bias_));
  return g.max_cols(conv);
}

SourceHiddens Encoder::attend(ad::Graph& g, ad::Var hiddens, Parameter& query, int dim,
                              const std::string& name) const {
  SourceHiddens src;
  src.hiddens = hiddens;
  src.dim = dim;
  src.name = name;
  ad::Var scores = g.matmul_t(hiddens, g.param(query));
  src.weights = g.softmax(scores);
  src.attended = g.scale_cols(hiddens, src.weights);
  return src;
}

SentenceHiddens Encoder::encode(ad::Graph& g, const AnnotatedSentence& sentence) const {
  const int n = static_cast<int>(sentence.tokens.size());
  if (n == 0) throw std::invalid_argument("encode: sentence has no tokens");
  if (cfg_.use_pos && !sentence.has_pos()) {
    throw ConfigError("POS features enabled but sentence has no POS tags");
  }
  if (cfg_.use_external) {
    if (!sentence.has_external()) {
      throw ConfigError("external vectors enabled but sentence has none");
    }
    if (static_cast<int>(sentence.external_vectors.front().size()) != cfg_.external_dim) {
      throw ConfigError("external vector dimension mismatch: expected " +
                        std::to_string(cfg_.external_dim) + ", got " +
                        std::to_string(sentence.external_vectors.front().size()));
    }
  }

  std::vector<ad::Var> ext_inputs;
  if (cfg_.use_external) {
    ext_inputs.reserve(n);
    for (int i = 0; i < n; ++i) {
      ext_inputs.push_back(g.constant(
          Eigen::Map<const Vector>(sentence.external_vectors[i].data(), cfg_.external_dim)));
    }
  }

  std::vector<ad::Var> inputs;
  inputs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::string& token = sentence.tokens[i];
    std::vector<ad::Var> parts = {char_feature(g, token),
                                  g.lookup(*word_emb_, vocab_->word_id(token))};
    if (cfg_.use_pos && !cfg_.pos_own_pipeline) {
      parts.push_back(g.lookup(*pos_emb_, vocab_->pos_id(sentence.pos_tags[i])));
    }
    if (cfg_.use_external && !cfg_.external_own_pipeline) {
      parts.push_back(ext_inputs[i]);
    }
    inputs.push_back(g.dropout(g.concat_rows(parts), cfg_.dropout));
  }

  SentenceHiddens out;
  out.num_tokens = n;
  const auto word_out = run_bilstm_stack(g, word_lstm_, std::move(inputs));
  out.sources.push_back(
      attend(g, g.hstack(word_out), *base_query_, 2 * cfg_.lstm_hidden, "base"));

  if (cfg_.use_pos && cfg_.pos_own_pipeline) {
    std::vector<ad::Var> pos_inputs;
    pos_inputs.reserve(n);
    for (int i = 0; i < n; ++i) {
      pos_inputs.push_back(
          g.dropout(g.lookup(*pos_emb_, vocab_->pos_id(sentence.pos_tags[i])), cfg_.dropout));
    }
    const auto pos_out = run_bilstm_stack(g, pos_lstm_, std::move(pos_inputs));
    out.sources.push_back(
        attend(g, g.hstack(pos_out), *pos_query_, 2 * cfg_.pos_lstm_hidden, "pos"));
  }

  if (cfg_.use_external && cfg_.external_own_pipeline) {
    int dim = cfg_.external_dim;
    std::vector<ad::Var> seq = ext_inputs;
    if (cfg_.external_lstm_layers > 0) {
      seq = run_bilstm_stack(g, external_lstm_, std::move(seq));
      dim = 2 * cfg_.external_lstm_hidden;
    }
    out.sources.push_back(attend(g, g.hstack(seq), *external_query_, dim, "external"));
  }
  return out;
}

}  // namespace termspan
