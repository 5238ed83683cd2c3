#include "ftrans/fortran_lexer.hpp"

#include <cctype>

#include "ftrans/error.hpp"

namespace ftrans::fortran {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// True when text[pos] == '.' begins a dot-operator such as .and. or .true.
bool dot_operator_at(std::string_view text, std::size_t pos, std::size_t* end) {
  std::size_t i = pos + 1;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
  if (i == pos + 1 || i >= text.size() || text[i] != '.') return false;
  *end = i + 1;
  return true;
}

class Lexer {
public:
  Lexer(std::string_view text, int first_line) : text_(text), line_(first_line) {}

  std::vector<Statement> run() {
    bool line_start = true;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (line_start) {
        line_start = false;
        std::size_t p = pos_;
        while (p < text_.size() && (text_[p] == ' ' || text_[p] == '\t')) ++p;
        if (p < text_.size() && text_[p] == '#' && !continuing_) {
          skip_to_eol();
          continue;
        }
        if (continuing_ && p < text_.size() && text_[p] == '&') {
          pos_ = p + 1;
          continue;
        }
      }
      if (c == '\n') {
        newline();
        line_start = true;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
        continue;
      }
      if (c == '!') {
        skip_to_eol();
        continue;
      }
      if (c == '&') {
        // Continuation marker: rest of line must be blank or a comment.
        continuing_ = true;
        ++pos_;
        continue;
      }
      if (c == ';') {
        flush();
        ++pos_;
        continue;
      }
      continuing_ = false;
      if (c == '\'' || c == '"') {
        lex_string(c);
      } else if (ident_start(c)) {
        lex_identifier();
      } else if (digit(c) || (c == '.' && pos_ + 1 < text_.size() && digit(text_[pos_ + 1]))) {
        lex_number();
      } else {
        lex_operator();
      }
    }
    flush();
    return std::move(out_);
  }

private:
  void skip_to_eol() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }

  void newline() {
    ++pos_;
    if (!continuing_) flush();
    ++line_;
  }

  void push(TokenKind kind, std::string text) {
    if (current_.tokens.empty()) current_.first_line = line_;
    current_.last_line = line_;
    current_.tokens.push_back(Token{kind, std::move(text), line_});
  }

  void flush() {
    if (!current_.tokens.empty()) out_.push_back(std::move(current_));
    current_ = Statement{};
  }

  void lex_string(char quote) {
    std::string s(1, quote);
    int start_line = line_;
    ++pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == quote) {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == quote) {
          s += quote;
          s += quote;
          pos_ += 2;
          continue;
        }
        s += quote;
        ++pos_;
        break;
      }
      if (c == '&') {
        // Possible continuation inside a character literal.
        std::size_t p = pos_ + 1;
        while (p < text_.size() && (text_[p] == ' ' || text_[p] == '\t' || text_[p] == '\r')) ++p;
        if (p >= text_.size() || text_[p] == '\n') {
          pos_ = p;
          if (pos_ < text_.size()) {
            ++pos_;
            ++line_;
          }
          while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
          if (pos_ < text_.size() && text_[pos_] == '&') ++pos_;
          continue;
        }
      }
      if (c == '\n') break;  // unterminated literal ends with the line
      s += c;
      ++pos_;
    }
    int end_line = line_;
    line_ = start_line;
    push(TokenKind::string, std::move(s));
    line_ = end_line;
    current_.last_line = end_line;
  }

  void lex_identifier() {
    std::size_t b = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    std::string s;
    s.reserve(pos_ - b);
    for (std::size_t i = b; i < pos_; ++i) s += lower(text_[i]);
    push(TokenKind::identifier, std::move(s));
  }

  void lex_number() {
    std::size_t b = pos_;
    while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      std::size_t dummy;
      if (!dot_operator_at(text_, pos_, &dummy)) {
        ++pos_;
        while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
      }
    }
    if (pos_ < text_.size()) {
      char e = lower(text_[pos_]);
      if (e == 'e' || e == 'd' || e == 'q') {
        std::size_t p = pos_ + 1;
        if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
        if (p < text_.size() && digit(text_[p])) {
          pos_ = p;
          while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
        }
      }
    }
    if (pos_ + 1 < text_.size() && text_[pos_] == '_' && ident_char(text_[pos_ + 1])) {
      ++pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    }
    std::string s;
    for (std::size_t i = b; i < pos_; ++i) s += lower(text_[i]);
    push(TokenKind::number, std::move(s));
  }

  void lex_operator() {
    static constexpr std::string_view two[] = {"::", "=>", "==", "/=", "<=", ">=",
                                               "**", "//", "(/", "/)"};
    std::size_t end = 0;
    if (text_[pos_] == '.' && dot_operator_at(text_, pos_, &end)) {
      std::string s;
      for (std::size_t i = pos_; i < end; ++i) s += lower(text_[i]);
      pos_ = end;
      push(TokenKind::op, std::move(s));
      return;
    }
    for (auto t : two) {
      if (text_.substr(pos_, 2) == t) {
        push(TokenKind::op, std::string(t));
        pos_ += 2;
        return;
      }
    }
    push(TokenKind::op, std::string(1, text_[pos_]));
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
  bool continuing_ = false;
  Statement current_;
  std::vector<Statement> out_;
};

}  // namespace

std::vector<Statement> lex_statements(std::string_view text, int first_line) {
  return Lexer(text, first_line).run();
}

void validate_utf8(std::string_view text, const std::string& file) {
  std::size_t i = 0;
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  while (i < text.size()) {
    unsigned char c = s[i];
    std::size_t n = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      n = 1;
    } else if ((c & 0xF0) == 0xE0) {
      n = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      n = 3;
    } else {
      throw NonUtf8Source(file, i);
    }
    for (std::size_t k = 1; k <= n; ++k) {
      if (i + k >= text.size() || (s[i + k] & 0xC0) != 0x80) throw NonUtf8Source(file, i);
    }
    i += n + 1;
  }
}

int find_fixed_form_line(std::string_view text) {
  int line = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view l = text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                          : nl - start);
    if (!l.empty()) {
      char c = l[0];
      if (c == '*') return line;
      if ((c == 'c' || c == 'C') && (l.size() == 1 || l[1] == ' ' || l[1] == '\t')) {
        std::size_t p = 1;
        while (p < l.size() && (l[p] == ' ' || l[p] == '\t')) ++p;
        bool assignment = p < l.size() && (l[p] == '=' || l[p] == '(' || l[p] == '%');
        if (!assignment) return line;
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
    ++line;
  }
  return 0;
}

bool is_type_keyword(std::string_view w) {
  return w == "real" || w == "integer" || w == "logical" || w == "complex" ||
         w == "character" || w == "double" || w == "doubleprecision" || w == "type" ||
         w == "class";
}

}  // namespace ftrans::fortran
