#include "support/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "termspan/rng.hpp"

namespace termspan::testing {

namespace {

// Terms in the fixture are runs of content words, so the corpus carries an
// actually learnable boundary signal; nested terms are sub-runs inside them.
const std::vector<std::string> kContentWords = {
    "mouse",      "interleukin", "receptor",  "alpha",      "gene",     "expression",
    "protein",    "binding",     "site",      "cell",       "nuclear",  "factor",
    "activation", "kappa",       "promoter",  "enhancer",   "domain",   "transcription",
    "pathway",    "signal",      "kinase",    "human",      "lymphocyte", "antigen",
    "response",   "level",       "complex",   "region",     "sequence", "element",
    "molecule",   "tumor",       "virus",     "beta",       "gamma",    "inhibitor"};

const std::vector<std::string> kFunctionWords = {"the", "of", "in",   "by",   "and", "with",
                                                 "is",  "was", "to",  "a",    "on",  "for",
                                                 "that", "this", "induced", "requires"};

constexpr int kMaxRunLength = 8;

// Laminar span trees: children lie strictly inside their parent, siblings are
// disjoint. This keeps the corpus renderable as nested markup.
struct SpanNode {
  int start;
  int end;
  std::vector<SpanNode> children;
};

// Nested terms inside a content run: a proper sub-run, recursively.
void add_nested(SpanNode& parent, int depth, Rng& rng, std::set<GoldSpan>& out) {
  const int parent_len = parent.end - parent.start + 1;
  if (depth >= 3 || parent_len < 2 || !rng.bernoulli(0.6)) return;
  const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(parent_len - 1)));
  const int start =
      parent.start + static_cast<int>(rng.below(static_cast<std::uint64_t>(parent_len - len + 1)));
  SpanNode child{start, start + len - 1, {}};
  out.insert({child.start, child.end});
  add_nested(child, depth + 1, rng, out);
  parent.children.push_back(child);
}

void render_node(const SpanNode& node, const std::vector<std::string>& tokens, std::ostringstream& out);

void render_range(int start, int end, const std::vector<SpanNode>& children,
                  const std::vector<std::string>& tokens, std::ostringstream& out) {
  int at = start;
  bool first = true;
  auto space = [&]() {
    if (!first) out << " ";
    first = false;
  };
  for (const auto& child : children) {
    for (; at < child.start; ++at) {
      space();
      out << tokens[static_cast<std::size_t>(at)];
    }
    space();
    render_node(child, tokens, out);
    at = child.end + 1;
  }
  for (; at <= end; ++at) {
    space();
    out << tokens[static_cast<std::size_t>(at)];
  }
}

void render_node(const SpanNode& node, const std::vector<std::string>& tokens,
                 std::ostringstream& out) {
  out << "<cons sem=\"G#term\">";
  render_range(node.start, node.end, node.children, tokens, out);
  out << "</cons>";
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(int num_sentences, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticCorpus result;
  std::ostringstream markup;
  markup << "<set>\n<article>\n<abstract>\n";
  for (int s = 0; s < num_sentences; ++s) {
    const int n = 4 + static_cast<int>(rng.below(21));
    AnnotatedSentence sent;
    std::vector<SpanNode> forest;

    int run_start = -1;
    auto close_run = [&](int end) {
      if (run_start < 0) return;
      SpanNode node{run_start, end, {}};
      sent.gold_spans.insert({node.start, node.end});
      add_nested(node, 1, rng, sent.gold_spans);
      forest.push_back(std::move(node));
      run_start = -1;
    };
    for (int i = 0; i < n; ++i) {
      const int run_len = run_start < 0 ? 0 : i - run_start;
      const bool content = run_len < kMaxRunLength && rng.bernoulli(0.55);
      if (content) {
        sent.tokens.push_back(kContentWords[rng.below(kContentWords.size())]);
        sent.pos_tags.push_back(rng.bernoulli(0.3) ? "JJ" : "NN");
        if (run_start < 0) run_start = i;
      } else {
        sent.tokens.push_back(kFunctionWords[rng.below(kFunctionWords.size())]);
        sent.pos_tags.push_back(rng.bernoulli(0.5) ? "IN" : "DT");
        close_run(i - 1);
      }
    }
    close_run(n - 1);

    markup << "<sentence>";
    std::ostringstream body;
    render_range(0, n - 1, forest, sent.tokens, body);
    markup << body.str() << "</sentence>\n";
    result.corpus.push_back(std::move(sent));
  }
  markup << "</abstract>\n</article>\n</set>\n";
  result.markup = markup.str();
  return result;
}

ReferenceCounts reference_counts(const Corpus& corpus) {
  ReferenceCounts counts;
  counts.sentences = static_cast<std::int64_t>(corpus.size());
  for (const auto& sent : corpus) {
    counts.words += static_cast<std::int64_t>(sent.tokens.size());
    // Token coverage: a term is nested iff one of its tokens is covered by
    // more than one gold span.
    std::vector<int> coverage(sent.tokens.size(), 0);
    for (const auto& [start, end] : sent.gold_spans) {
      for (int i = start; i <= end; ++i) ++coverage[static_cast<std::size_t>(i)];
    }
    for (const auto& [start, end] : sent.gold_spans) {
      ++counts.terms;
      const int len = end - start + 1;
      counts.max_term_length = std::max(counts.max_term_length, len);
      ++counts.length_histogram[len];
      bool shared = false;
      for (int i = start; i <= end && !shared; ++i) {
        shared = coverage[static_cast<std::size_t>(i)] > 1;
      }
      if (shared) {
        ++counts.nested;
      } else {
        ++counts.independent;
      }
    }
  }
  return counts;
}

AnnotatedSentence example_sentence() {
  AnnotatedSentence sent;
  sent.tokens = {"Mouse", "interleukin-2", "receptor", "alpha", "gene", "expression"};
  sent.gold_spans = {{0, 4}, {0, 5}, {1, 1}};
  return sent;
}

std::string example_markup() {
  return "<set><article><abstract>"
         "<sentence><cons sem=\"G#other_name\"><cons sem=\"G#DNA_domain_or_region\">Mouse "
         "<cons sem=\"G#protein_molecule\">interleukin-2</cons> receptor alpha gene</cons> "
         "expression</cons></sentence>"
         "</abstract></article></set>";
}

ModelConfig tiny_config(int lstm_hidden, int max_span_length) {
  ModelConfig cfg;
  cfg.encoder.word_dim = 6;
  cfg.encoder.char_dim = 4;
  cfg.encoder.char_window = 2;
  cfg.encoder.char_filters = 5;
  cfg.encoder.lstm_hidden = lstm_hidden;
  cfg.encoder.lstm_layers = 2;
  cfg.encoder.dropout = 0.0;
  cfg.max_span_length = max_span_length;
  cfg.length_dim = 4;
  cfg.head_hidden = 8;
  cfg.head_depth = 1;
  cfg.batch_size = 16;
  cfg.early_stop = 5;
  cfg.stage1_max_epochs = 10;
  cfg.stage2_max_epochs = 10;
  cfg.seed = 626;
  return cfg;
}

GradCheckResult check_gradients(const std::vector<Parameter*>& params,
                                const std::function<double(bool accumulate)>& loss, int samples,
                                std::uint64_t seed, double step) {
  for (auto* p : params) p->zero_grad();
  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) {
    analytic.push_back(p->grad);
    p->zero_grad();
  }

  Rng rng(seed);
  GradCheckResult result;
  for (int s = 0; s < samples; ++s) {
    const auto pi = static_cast<std::size_t>(rng.below(params.size()));
    Parameter& p = *params[pi];
    const auto ei = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
    const double saved = p.value.data()[ei];
    p.value.data()[ei] = saved + step;
    const double plus = loss(false);
    p.value.data()[ei] = saved - step;
    const double minus = loss(false);
    p.value.data()[ei] = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    const double exact = analytic[pi].data()[ei];
    const double rel =
        std::abs(exact - numeric) / std::max({1.0, std::abs(exact), std::abs(numeric)});
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.checked;
  }
  return result;
}

}  // namespace termspan::testing
