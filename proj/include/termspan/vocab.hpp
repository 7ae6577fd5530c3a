#ifndef TERMSPAN_VOCAB_HPP
#define TERMSPAN_VOCAB_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "termspan/corpus.hpp"
#include "termspan/params.hpp"

namespace termspan {

// Index maps for words, characters (bytes) and POS tags. Index 0 is padding,
// index 1 the out-of-vocabulary entry. Assignment order is deterministic:
// descending train frequency, ties by token text.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab() = default;
  Vocab(std::vector<std::string> words, std::vector<int> chars, std::vector<std::string> pos_tags,
        bool lowercase);

  int word_id(const std::string& token) const;
  int char_id(unsigned char c) const { return char_index_[c]; }
  int pos_id(const std::string& tag) const;

  int num_words() const { return static_cast<int>(words_.size()); }
  int num_chars() const { return static_cast<int>(chars_.size()); }
  int num_pos() const { return static_cast<int>(pos_tags_.size()); }

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<int>& chars() const { return chars_; }
  const std::vector<std::string>& pos_tags() const { return pos_tags_; }
  bool lowercase() const { return lowercase_; }

  std::string normalize(const std::string& token) const;

 private:
  void rebuild_maps();

  std::vector<std::string> words_;
  std::vector<int> chars_;  // byte values; [0] and [1] are specials (-1 sentinel)
  std::vector<std::string> pos_tags_;
  bool lowercase_ = true;

  std::unordered_map<std::string, int> word_index_;
  std::unordered_map<std::string, int> pos_index_;
  int char_index_[256] = {};
};

// Builds the vocabulary from the training split. min_count applies to words;
// characters and POS tags keep every observed entry.
Vocab build_vocab(const Corpus& train_corpus, int min_count, bool lowercase = true);

struct PretrainedReport {
  std::size_t file_rows = 0;
  std::size_t matched = 0;
  std::size_t vocab_words = 0;  // excluding specials
  double coverage = 0.0;
  bool empty_overlap() const { return matched == 0; }
};

// Text file with one token per line followed by its vector. Matching vocab
// columns are overwritten; everything else keeps its random initialization.
PretrainedReport load_pretrained_vectors(const std::string& path, const Vocab& vocab,
                                         Parameter& embedding);

}  // namespace termspan

#endif  // TERMSPAN_VOCAB_HPP
