#ifndef TERMSPAN_SPANREPR_HPP
#define TERMSPAN_SPANREPR_HPP

#include <string>
#include <vector>

#include "termspan/encoder.hpp"
#include "termspan/spans.hpp"

namespace termspan {

// Attention-pooled vector together with its weights, for inspection.
struct Pooled {
  ad::Var vector;
  ad::Var weights;
};

// Span token features refined by a fixed-width MLP: the span's hidden columns
// are flattened in order, zero-padded to max_len * dim, and projected back to
// dim through one hidden layer.
struct SpanMlp {
  Parameter* hidden_weight = nullptr;  // dim x (max_len * dim)
  Parameter* hidden_bias = nullptr;
  Parameter* out_weight = nullptr;  // dim x dim
  Parameter* out_bias = nullptr;
};

ad::Var span_content(ad::Graph& g, ad::Var span_columns, const SpanMlp& mlp, int max_len);

// Attention over the span's own tokens with a learned query; the result lies
// in the convex hull of the span columns.
Pooled span_head(ad::Graph& g, ad::Var span_columns, ad::Var query);

// First and last hidden columns, concatenated.
ad::Var start_end(ad::Graph& g, ad::Var span_columns);

// Sentence attention queried by the span's mean hidden vector.
Pooled sentence_targeted(ad::Graph& g, ad::Var span_columns, ad::Var sentence_columns);

// Per-span debug view of the attention distributions.
struct SpanAttention {
  std::string source;
  Vector head_weights;
  Vector context_weights;
};

// Builds the concatenated span representation: four feature blocks per
// source plus one length embedding. Each extra source carries its own query
// and MLP parameters.
class SpanReprBuilder {
 public:
  SpanReprBuilder(int max_span_length, int length_dim, const std::vector<int>& source_dims,
                  ParameterStore& store, Rng& rng);

  int feature_dim() const { return feature_dim_; }
  int max_span_length() const { return max_len_; }

  ad::Var build(ad::Graph& g, const SpanCandidate& candidate, const SentenceHiddens& hiddens,
                std::vector<SpanAttention>* attention = nullptr) const;

  // All candidates of one sentence at once; parameter nodes are created once
  // per call and the content MLP runs as a single matrix product over the
  // padded span columns. attention, when set, receives the per-candidate
  // distributions in candidate-major order.
  std::vector<ad::Var> build_all(ad::Graph& g, const std::vector<SpanCandidate>& candidates,
                                 const SentenceHiddens& hiddens,
                                 std::vector<SpanAttention>* attention = nullptr) const;

 private:
  struct SourceParams {
    SpanMlp mlp;
    Parameter* head_query = nullptr;
    int dim = 0;
  };

  int max_len_;
  int length_dim_;
  int feature_dim_;
  std::vector<SourceParams> sources_;
  Parameter* length_table_ = nullptr;  // length_dim x max_len
};

}  // namespace termspan

#endif  // TERMSPAN_SPANREPR_HPP
