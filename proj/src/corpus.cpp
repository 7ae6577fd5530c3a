#include "termspan/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "termspan/rng.hpp"

namespace termspan {

using nlohmann::json;

void SplitSpec::validate() const {
  if (train_fraction < 0 || dev_fraction < 0 || test_fraction < 0) {
    throw ConfigError("split fractions must be non-negative");
  }
  const double sum = train_fraction + dev_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1.0, got " + std::to_string(sum));
  }
}

ParseResult load_plain_format(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  ParseResult result;
  std::string line;
  int record = 0;
  while (std::getline(in, line)) {
    ++record;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("record " + std::to_string(record) + ": invalid JSON: " + e.what());
    }
    AnnotatedSentence sent;
    if (!j.contains("tokens") || !j["tokens"].is_array()) {
      throw std::runtime_error("record " + std::to_string(record) + ": missing \"tokens\" array");
    }
    for (const auto& t : j["tokens"]) sent.tokens.push_back(t.get<std::string>());
    if (sent.tokens.empty()) {
      throw std::runtime_error("record " + std::to_string(record) + ": empty token list");
    }
    const int n = static_cast<int>(sent.tokens.size());
    if (j.contains("spans")) {
      for (const auto& s : j["spans"]) {
        if (!s.is_array() || s.size() != 2) {
          throw std::runtime_error("record " + std::to_string(record) + ": span must be [start,end]");
        }
        const int start = s[0].get<int>();
        const int end = s[1].get<int>();
        if (start > end) {
          throw std::runtime_error("record " + std::to_string(record) + ": start exceeds end in span [" +
                                   std::to_string(start) + "," + std::to_string(end) + "]");
        }
        if (start < 0 || end >= n) {
          throw std::runtime_error("record " + std::to_string(record) + ": span [" + std::to_string(start) +
                                   "," + std::to_string(end) + "] out of range for " + std::to_string(n) +
                                   " tokens");
        }
        if (!sent.gold_spans.insert({start, end}).second) {
          result.warnings.push_back("record " + std::to_string(record) + ": duplicate span [" +
                                    std::to_string(start) + "," + std::to_string(end) + "] dropped");
        }
      }
    }
    if (j.contains("pos")) {
      for (const auto& p : j["pos"]) sent.pos_tags.push_back(p.get<std::string>());
      if (sent.pos_tags.size() != sent.tokens.size()) {
        throw std::runtime_error("record " + std::to_string(record) + ": pos tags not aligned to tokens");
      }
    }
    result.sentences.push_back(std::move(sent));
  }
  return result;
}

void write_plain_format(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  for (const auto& sent : corpus) {
    json j;
    j["tokens"] = sent.tokens;
    auto spans = json::array();
    for (const auto& [s, e] : sent.gold_spans) spans.push_back({s, e});
    j["spans"] = spans;
    if (sent.has_pos()) j["pos"] = sent.pos_tags;
    out << j.dump() << "\n";
  }
}

void load_external_vectors(const std::string& path, Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vector file: " + path);
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (record >= corpus.size()) {
      throw std::runtime_error("vector file has more records than the corpus");
    }
    json j = json::parse(line);
    auto& sent = corpus[record];
    std::vector<std::vector<double>> vecs;
    for (const auto& v : j.at("vectors")) vecs.push_back(v.get<std::vector<double>>());
    if (vecs.size() != sent.tokens.size()) {
      throw std::runtime_error("record " + std::to_string(record + 1) +
                               ": vectors not aligned to tokens");
    }
    for (std::size_t i = 1; i < vecs.size(); ++i) {
      if (vecs[i].size() != vecs[0].size()) {
        throw std::runtime_error("record " + std::to_string(record + 1) +
                                 ": inconsistent vector dimensions");
      }
    }
    sent.external_vectors = std::move(vecs);
    ++record;
  }
  if (record != corpus.size()) {
    throw std::runtime_error("vector file has fewer records than the corpus");
  }
}

namespace {

inline bool spans_share_tokens(const GoldSpan& a, const GoldSpan& b) {
  return a.first <= b.second && b.first <= a.second;
}

}  // namespace

CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.empty()) throw std::runtime_error("compute_stats: empty corpus");
  CorpusStats stats;
  stats.num_sentences = static_cast<std::int64_t>(corpus.size());
  for (const auto& sent : corpus) {
    stats.num_words += static_cast<std::int64_t>(sent.tokens.size());
    std::vector<GoldSpan> spans(sent.gold_spans.begin(), sent.gold_spans.end());
    stats.num_terms += static_cast<std::int64_t>(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const int len = spans[i].second - spans[i].first + 1;
      stats.max_term_length = std::max(stats.max_term_length, len);
      ++stats.length_histogram[len];
      // A term is nested iff it shares any token with a distinct gold term.
      bool nested = false;
      for (std::size_t j = 0; j < spans.size() && !nested; ++j) {
        if (j != i && spans_share_tokens(spans[i], spans[j])) nested = true;
      }
      if (nested) {
        ++stats.num_nested_terms;
      } else {
        ++stats.num_independent_terms;
      }
    }
  }
  if (stats.num_words > 0) {
    stats.term_ratio = static_cast<double>(stats.num_terms) / static_cast<double>(stats.num_words);
  }
  return stats;
}

std::string stats_report_csv(const CorpusStats& stats) {
  std::ostringstream out;
  out << "length,count,percentage,cumulative_percentage\n";
  double cumulative = 0.0;
  for (const auto& [len, count] : stats.length_histogram) {
    const double pct =
        stats.num_terms > 0 ? 100.0 * static_cast<double>(count) / static_cast<double>(stats.num_terms) : 0.0;
    cumulative += pct;
    out << len << "," << count << "," << pct << "," << cumulative << "\n";
  }
  out << "\n";
  out << "summary,value\n";
  out << "num_sentences," << stats.num_sentences << "\n";
  out << "num_words," << stats.num_words << "\n";
  out << "num_terms," << stats.num_terms << "\n";
  out << "num_nested_terms," << stats.num_nested_terms << "\n";
  out << "num_independent_terms," << stats.num_independent_terms << "\n";
  out << "max_term_length," << stats.max_term_length << "\n";
  out << "term_ratio," << stats.term_ratio << "\n";
  return out.str();
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> fractions = {spec.train_fraction, spec.dev_fraction, spec.test_fraction};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(exact);
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  // Largest-remainder apportionment; ties resolved in train/dev/test order.
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t leftover = n - assigned, i = 0; i < leftover; ++i) {
    ++counts[order[i % 3]];
  }
  for (int i = 0; i < 3; ++i) {
    if (fractions[i] > 0.0 && counts[i] == 0) {
      throw std::runtime_error(
          "split produces an empty part; use a corpus with at least " +
          std::to_string(static_cast<std::size_t>(std::ceil(1.0 / fractions[i]))) + " sentences");
    }
  }
  return counts;
}

std::int64_t count_words(const Corpus& corpus) {
  std::int64_t total = 0;
  for (const auto& sent : corpus) total += static_cast<std::int64_t>(sent.tokens.size());
  return total;
}

CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  const auto counts = split_sizes(corpus.size(), spec);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.shuffle_seed);
  rng.shuffle(order);

  CorpusSplits splits;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < counts[0]; ++i) splits.train.push_back(corpus[order[pos++]]);
  for (std::size_t i = 0; i < counts[1]; ++i) splits.dev.push_back(corpus[order[pos++]]);
  for (std::size_t i = 0; i < counts[2]; ++i) splits.test.push_back(corpus[order[pos++]]);
  return splits;
}

}  // namespace termspan
