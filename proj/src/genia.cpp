#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "termspan/corpus.hpp"

namespace termspan {

namespace {

// Recursive-descent reader for the XML subset used by GENIA-style term
// annotation: <sentence> elements hold whitespace-separated tokens or <w>
// token elements, and <cons> constituents mark term extents at arbitrary
// nesting depth. Everything else is structural and traversed transparently.
class MarkupReader {
 public:
  explicit MarkupReader(const std::string& text) : text_(text) {}

  ParseResult run() {
    for (;;) {
      skip_misc();
      if (eof()) break;
      if (peek() != '<') {
        // Stray text outside any sentence carries no annotation.
        get();
        continue;
      }
      parse_element(false);
    }
    return std::move(result_);
  }

 private:
  enum class Kind { Sentence, Cons, Word, Other };

  struct Attr {
    std::string name;
    std::string value;
  };

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char peek_at(std::size_t off) const {
    return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
  }

  char get() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, col_); }

  bool starts_with(const char* s) const {
    return text_.compare(pos_, std::char_traits<char>::length(s), s) == 0;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
  }

  // Comments, processing instructions and doctype declarations.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        while (!eof() && !starts_with("-->")) get();
        if (eof()) fail("unterminated comment");
        get();
        get();
        get();
      } else if (starts_with("<?")) {
        while (!eof() && peek() != '>') get();
        if (eof()) fail("unterminated processing instruction");
        get();
      } else if (starts_with("<!")) {
        int bracket_depth = 0;
        while (!eof()) {
          const char c = get();
          if (c == '[') ++bracket_depth;
          if (c == ']') --bracket_depth;
          if (c == '>' && bracket_depth == 0) break;
        }
      } else {
        return;
      }
    }
  }

  std::string read_name() {
    std::string name;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-' || peek() == ':' || peek() == '.')) {
      name.push_back(get());
    }
    if (name.empty()) fail("expected tag name");
    return name;
  }

  std::string decode_entity() {
    // Positioned on '&'.
    get();
    std::string ent;
    while (!eof() && peek() != ';') {
      ent.push_back(get());
      if (ent.size() > 10) fail("malformed entity reference");
    }
    if (eof()) fail("unterminated entity reference");
    get();
    if (ent == "amp") return "&";
    if (ent == "lt") return "<";
    if (ent == "gt") return ">";
    if (ent == "quot") return "\"";
    if (ent == "apos") return "'";
    if (!ent.empty() && ent[0] == '#') {
      const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      const long code = std::strtol(ent.c_str() + (hex ? 2 : 1), nullptr, hex ? 16 : 10);
      if (code <= 0 || code > 0x10ffff) fail("invalid character reference &" + ent + ";");
      std::string out;
      if (code < 0x80) {
        out.push_back(static_cast<char>(code));
      } else if (code < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (code >> 6)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3f)));
      } else if (code < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (code >> 12)));
        out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3f)));
      } else {
        out.push_back(static_cast<char>(0xf0 | (code >> 18)));
        out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3f)));
      }
      return out;
    }
    fail("unknown entity &" + ent + ";");
  }

  std::vector<Attr> read_attributes() {
    std::vector<Attr> attrs;
    for (;;) {
      skip_ws();
      if (eof()) fail("unexpected end of input in tag");
      if (peek() == '>' || peek() == '/') return attrs;
      Attr a;
      a.name = read_name();
      skip_ws();
      if (eof() || peek() != '=') fail("expected '=' after attribute " + a.name);
      get();
      skip_ws();
      if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
      const char quote = get();
      while (!eof() && peek() != quote) {
        if (peek() == '&') {
          a.value += decode_entity();
        } else {
          a.value.push_back(get());
        }
      }
      if (eof()) fail("unterminated attribute value");
      get();
      attrs.push_back(std::move(a));
    }
  }

  static Kind classify(const std::string& name) {
    if (name == "sentence") return Kind::Sentence;
    if (name == "cons" || name == "term") return Kind::Cons;
    if (name == "w" || name == "tok") return Kind::Word;
    return Kind::Other;
  }

  void warn(const std::string& msg) {
    result_.warnings.push_back(msg + " (line " + std::to_string(line_) + ")");
  }

  // Parses one element starting at '<'. in_sentence tells whether an
  // enclosing <sentence> is open.
  void parse_element(bool in_sentence) {
    get();  // '<'
    if (eof()) fail("unexpected end of input after '<'");
    if (peek() == '/') fail("unmatched closing tag");
    const int open_line = line_;
    const std::string name = read_name();
    const auto attrs = read_attributes();
    const Kind kind = classify(name);

    bool self_closing = false;
    skip_ws();
    if (!eof() && peek() == '/') {
      get();
      self_closing = true;
    }
    if (eof() || peek() != '>') fail("expected '>' to close tag <" + name + ">");
    get();

    if (kind == Kind::Sentence) {
      if (in_sentence) fail("nested <sentence> element");
      begin_sentence();
      if (!self_closing) parse_content(name, true);
      end_sentence(open_line);
      return;
    }
    if (kind == Kind::Cons) {
      if (!in_sentence) {
        warn("constituent outside a sentence at line " + std::to_string(open_line) +
             ": span dropped");
        if (!self_closing) parse_content(name, in_sentence);
        return;
      }
      cons_stack_.push_back(static_cast<int>(tokens_.size()));
      if (!self_closing) parse_content(name, true);
      const int start = cons_stack_.back();
      cons_stack_.pop_back();
      const int end = static_cast<int>(tokens_.size()) - 1;
      if (end < start) {
        warn("empty constituent at line " + std::to_string(open_line) + ": span dropped");
      } else if (!spans_.insert({start, end}).second) {
        warn("duplicate constituent extent [" + std::to_string(start) + "," + std::to_string(end) +
             "] at line " + std::to_string(open_line) + ": deduplicated");
      }
      return;
    }
    if (kind == Kind::Word && in_sentence) {
      std::string text = self_closing ? std::string() : collect_text(name);
      // One <w> element is one pre-segmented token.
      const auto first = text.find_first_not_of(" \t\r\n");
      if (first == std::string::npos) {
        warn("empty <" + name + "> element at line " + std::to_string(open_line));
        return;
      }
      const auto last = text.find_last_not_of(" \t\r\n");
      tokens_.push_back(text.substr(first, last - first + 1));
      std::string tag;
      for (const auto& a : attrs) {
        if (a.name == "c" || a.name == "pos") tag = a.value;
      }
      token_tags_.push_back(tag);
      return;
    }
    // Structural element: traverse transparently.
    if (!self_closing) parse_content(name, in_sentence);
  }

  // Content of an open element until its matching close tag.
  void parse_content(const std::string& open_name, bool in_sentence) {
    std::string text_run;
    auto flush_text = [&]() {
      if (in_sentence) add_text_tokens(text_run);
      text_run.clear();
    };
    for (;;) {
      if (eof()) fail("unexpected end of input; unclosed element <" + open_name + ">");
      if (peek() == '<') {
        if (peek_at(1) == '/') {
          flush_text();
          get();
          get();
          const std::string close = read_name();
          skip_ws();
          if (eof() || peek() != '>') fail("expected '>' in closing tag </" + close + ">");
          get();
          if (close != open_name) {
            fail("mismatched closing tag </" + close + ">, expected </" + open_name + ">");
          }
          return;
        }
        if (starts_with("<!--") || starts_with("<?") || starts_with("<!")) {
          flush_text();
          skip_misc();
          continue;
        }
        flush_text();
        parse_element(in_sentence);
      } else if (peek() == '&') {
        text_run += decode_entity();
      } else {
        text_run.push_back(get());
      }
    }
  }

  // Reads raw text content of an element (used for <w>); child markup is not
  // expected inside token elements.
  std::string collect_text(const std::string& open_name) {
    std::string text;
    for (;;) {
      if (eof()) fail("unexpected end of input; unclosed element <" + open_name + ">");
      if (peek() == '<') {
        if (peek_at(1) == '/') {
          get();
          get();
          const std::string close = read_name();
          skip_ws();
          if (eof() || peek() != '>') fail("expected '>' in closing tag </" + close + ">");
          get();
          if (close != open_name) {
            fail("mismatched closing tag </" + close + ">, expected </" + open_name + ">");
          }
          return text;
        }
        fail("markup inside token element <" + open_name + ">");
      } else if (peek() == '&') {
        text += decode_entity();
      } else {
        text.push_back(get());
      }
    }
  }

  void add_text_tokens(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) {
        tokens_.push_back(text.substr(i, j - i));
        token_tags_.emplace_back();
      }
      i = j;
    }
  }

  void begin_sentence() {
    tokens_.clear();
    token_tags_.clear();
    spans_.clear();
  }

  void end_sentence(int open_line) {
    if (tokens_.empty()) {
      warn("sentence without tokens at line " + std::to_string(open_line) + ": skipped");
      return;
    }
    AnnotatedSentence sent;
    sent.tokens = tokens_;
    sent.gold_spans = spans_;
    const bool any_tag =
        std::any_of(token_tags_.begin(), token_tags_.end(), [](const std::string& t) { return !t.empty(); });
    if (any_tag) {
      sent.pos_tags = token_tags_;
      for (auto& t : sent.pos_tags) {
        if (t.empty()) t = "UNK";
      }
    }
    result_.sentences.push_back(std::move(sent));
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  ParseResult result_;
  std::vector<std::string> tokens_;
  std::vector<std::string> token_tags_;
  std::set<GoldSpan> spans_;
  std::vector<int> cons_stack_;
};

}  // namespace

ParseResult parse_nested_annotations(const std::string& document) {
  MarkupReader reader(document);
  return reader.run();
}

ParseResult parse_nested_annotations_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open annotation file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_nested_annotations(buf.str());
}

}  // namespace termspan
