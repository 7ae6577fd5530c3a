#include "termspan/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace termspan {

namespace {

const std::string kPadToken = "<pad>";
const std::string kUnkToken = "<unk>";

template <typename Key>
std::vector<Key> ranked_entries(const std::map<Key, std::int64_t>& counts, std::int64_t min_count) {
  std::vector<std::pair<Key, std::int64_t>> items;
  for (const auto& [key, count] : counts) {
    if (count >= min_count) items.push_back({key, count});
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<Key> out;
  out.reserve(items.size());
  for (auto& [key, count] : items) out.push_back(key);
  return out;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> words, std::vector<int> chars,
             std::vector<std::string> pos_tags, bool lowercase)
    : words_(std::move(words)),
      chars_(std::move(chars)),
      pos_tags_(std::move(pos_tags)),
      lowercase_(lowercase) {
  rebuild_maps();
}

void Vocab::rebuild_maps() {
  word_index_.clear();
  pos_index_.clear();
  for (int i = 0; i < static_cast<int>(words_.size()); ++i) word_index_[words_[i]] = i;
  for (int i = 0; i < static_cast<int>(pos_tags_.size()); ++i) pos_index_[pos_tags_[i]] = i;
  std::fill(std::begin(char_index_), std::end(char_index_), kUnk);
  for (int i = 0; i < static_cast<int>(chars_.size()); ++i) {
    if (chars_[i] >= 0) char_index_[chars_[i]] = i;
  }
}

std::string Vocab::normalize(const std::string& token) const {
  if (!lowercase_) return token;
  std::string out = token;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int Vocab::word_id(const std::string& token) const {
  const auto it = word_index_.find(normalize(token));
  return it == word_index_.end() ? kUnk : it->second;
}

int Vocab::pos_id(const std::string& tag) const {
  const auto it = pos_index_.find(tag);
  return it == pos_index_.end() ? kUnk : it->second;
}

Vocab build_vocab(const Corpus& train_corpus, int min_count, bool lowercase) {
  if (train_corpus.empty()) throw std::runtime_error("build_vocab: empty corpus");
  std::map<std::string, std::int64_t> word_counts;
  std::map<int, std::int64_t> char_counts;
  std::map<std::string, std::int64_t> pos_counts;
  for (const auto& sent : train_corpus) {
    for (const auto& token : sent.tokens) {
      std::string w = token;
      if (lowercase) {
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      }
      ++word_counts[w];
      for (unsigned char c : token) ++char_counts[static_cast<int>(c)];
    }
    for (const auto& tag : sent.pos_tags) ++pos_counts[tag];
  }

  std::vector<std::string> words = {kPadToken, kUnkToken};
  for (auto& w : ranked_entries(word_counts, min_count)) words.push_back(std::move(w));

  std::vector<int> chars = {-1, -1};  // pad/unk have no byte value
  for (int c : ranked_entries(char_counts, 1)) chars.push_back(c);

  std::vector<std::string> pos_tags = {kPadToken, kUnkToken};
  for (auto& t : ranked_entries(pos_counts, 1)) pos_tags.push_back(std::move(t));

  return Vocab(std::move(words), std::move(chars), std::move(pos_tags), lowercase);
}

PretrainedReport load_pretrained_vectors(const std::string& path, const Vocab& vocab,
                                         Parameter& embedding) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pretrained vector file: " + path);

  PretrainedReport report;
  report.vocab_words = static_cast<std::size_t>(std::max(0, vocab.num_words() - 2));

  const Index dim = embedding.value.rows();
  std::string line;
  int line_no = 0;
  std::vector<bool> seen(static_cast<std::size_t>(vocab.num_words()), false);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (static_cast<Index>(values.size()) != dim) {
      throw std::runtime_error("pretrained vector file line " + std::to_string(line_no) + ": dimension " +
                               std::to_string(values.size()) + " does not match embedding dimension " +
                               std::to_string(dim));
    }
    ++report.file_rows;
    const int id = vocab.word_id(token);
    if (id > Vocab::kUnk && !seen[static_cast<std::size_t>(id)]) {
      for (Index i = 0; i < dim; ++i) embedding.value(i, id) = values[static_cast<std::size_t>(i)];
      seen[static_cast<std::size_t>(id)] = true;
      ++report.matched;
    }
  }
  if (report.vocab_words > 0) {
    report.coverage = static_cast<double>(report.matched) / static_cast<double>(report.vocab_words);
  }
  return report;
}

}  // namespace termspan
