#include "termspan/spanrepr.hpp"

#include <stdexcept>

namespace termspan {

ad::Var span_content(ad::Graph& g, ad::Var span_columns, const SpanMlp& mlp, int max_len) {
  const Index dim = g.value(span_columns).rows();
  if (g.value(span_columns).cols() > max_len) {
    throw std::logic_error("span longer than the configured maximum");
  }
  ad::Var flat = g.pad_rows(g.flatten(span_columns), dim * max_len);
  ad::Var hidden = g.tanh(g.affine(g.param(*mlp.hidden_weight), flat, g.param(*mlp.hidden_bias)));
  return g.affine(g.param(*mlp.out_weight), hidden, g.param(*mlp.out_bias));
}

Pooled span_head(ad::Graph& g, ad::Var span_columns, ad::Var query) {
  Pooled out;
  out.weights = g.softmax(g.matmul_t(span_columns, query));
  out.vector = g.matmul(span_columns, out.weights);
  return out;
}

ad::Var start_end(ad::Graph& g, ad::Var span_columns) {
  const Index len = g.value(span_columns).cols();
  return g.concat_rows({g.cols(span_columns, 0, 1), g.cols(span_columns, len - 1, 1)});
}

Pooled sentence_targeted(ad::Graph& g, ad::Var span_columns, ad::Var sentence_columns) {
  Pooled out;
  ad::Var span_mean = g.mean_cols(span_columns);
  out.weights = g.softmax(g.matmul_t(sentence_columns, span_mean));
  out.vector = g.matmul(sentence_columns, out.weights);
  return out;
}

SpanReprBuilder::SpanReprBuilder(int max_span_length, int length_dim,
                                 const std::vector<int>& source_dims, ParameterStore& store,
                                 Rng& rng)
    : max_len_(max_span_length), length_dim_(length_dim) {
  if (max_len_ < 1) throw ConfigError("max span length must be >= 1");
  if (length_dim_ < 1) throw ConfigError("length embedding dimension must be >= 1");
  feature_dim_ = length_dim_;
  for (std::size_t s = 0; s < source_dims.size(); ++s) {
    const int dim = source_dims[s];
    const std::string prefix = "repr.s" + std::to_string(s);
    SourceParams p;
    p.dim = dim;
    p.mlp.hidden_weight = &store.add(prefix + ".content.W1", dim, dim * max_len_);
    init_glorot(*p.mlp.hidden_weight, rng);
    p.mlp.hidden_bias = &store.add(prefix + ".content.b1", dim, 1);
    p.mlp.out_weight = &store.add(prefix + ".content.W2", dim, dim);
    init_glorot(*p.mlp.out_weight, rng);
    p.mlp.out_bias = &store.add(prefix + ".content.b2", dim, 1);
    p.head_query = &store.add(prefix + ".head_query", dim, 1);
    init_uniform(*p.head_query, rng, 0.1);
    sources_.push_back(p);
    feature_dim_ += 5 * dim;
  }
  length_table_ = &store.add("repr.length_emb", length_dim_, max_len_);
  init_uniform(*length_table_, rng, 0.1);
}

ad::Var SpanReprBuilder::build(ad::Graph& g, const SpanCandidate& candidate,
                               const SentenceHiddens& hiddens,
                               std::vector<SpanAttention>* attention) const {
  return build_all(g, {candidate}, hiddens, attention).front();
}

std::vector<ad::Var> SpanReprBuilder::build_all(ad::Graph& g,
                                                const std::vector<SpanCandidate>& candidates,
                                                const SentenceHiddens& hiddens,
                                                std::vector<SpanAttention>* attention) const {
  if (hiddens.sources.size() != sources_.size()) {
    throw std::logic_error("feature source count mismatch between encoder and span builder");
  }
  const std::size_t count = candidates.size();
  for (const auto& cand : candidates) {
    if (cand.length() < 1 || cand.length() > max_len_) {
      throw std::logic_error("candidate length outside [1, max span length]");
    }
    if (cand.end >= hiddens.num_tokens) {
      throw std::logic_error("candidate exceeds sentence length");
    }
  }
  if (count == 0) return {};

  // blocks[c] collects the feature parts of candidate c in order.
  std::vector<std::vector<ad::Var>> blocks(count);
  std::vector<std::vector<SpanAttention>> per_candidate_attention(attention ? count : 0);

  for (std::size_t s = 0; s < sources_.size(); ++s) {
    const SourceParams& params = sources_[s];
    const SourceHiddens& src = hiddens.sources[s];
    const Index dim = params.dim;

    ad::Var query = g.param(*params.head_query);
    ad::Var w1 = g.param(*params.mlp.hidden_weight);
    ad::Var b1 = g.param(*params.mlp.hidden_bias);
    ad::Var w2 = g.param(*params.mlp.out_weight);
    ad::Var b2 = g.param(*params.mlp.out_bias);

    // One content-MLP product covers every candidate of the sentence.
    std::vector<ad::Var> span_cols_by_candidate;
    std::vector<ad::Var> padded;
    span_cols_by_candidate.reserve(count);
    padded.reserve(count);
    for (const auto& cand : candidates) {
      ad::Var span_cols = g.cols(src.attended, cand.start, cand.length());
      span_cols_by_candidate.push_back(span_cols);
      padded.push_back(g.pad_rows(g.flatten(span_cols), dim * max_len_));
    }
    ad::Var content = g.affine(w2, g.tanh(g.affine(w1, g.hstack(padded), b1)), b2);

    for (std::size_t c = 0; c < count; ++c) {
      const SpanCandidate& cand = candidates[c];
      ad::Var span_cols = span_cols_by_candidate[c];
      Pooled head = span_head(g, span_cols, query);
      ad::Var boundary = start_end(g, span_cols);
      Pooled context = sentence_targeted(g, span_cols, src.attended);
      blocks[c].push_back(g.cols(content, static_cast<Index>(c), 1));
      blocks[c].push_back(head.vector);
      blocks[c].push_back(boundary);
      blocks[c].push_back(context.vector);
      if (attention != nullptr) {
        per_candidate_attention[c].push_back(
            {src.name, g.value(head.weights).col(0), g.value(context.weights).col(0)});
      }
      if (s == 0) blocks[c].push_back(g.lookup(*length_table_, cand.length() - 1));
    }
  }

  std::vector<ad::Var> features;
  features.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    features.push_back(g.concat_rows(blocks[c]));
    if (attention != nullptr) {
      for (auto& att : per_candidate_attention[c]) attention->push_back(std::move(att));
    }
  }
  return features;
}

}  // namespace termspan
