#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ftrans::fortran {

enum class TokenKind { identifier, number, string, op };

struct Token {
  TokenKind kind;
  // Identifiers and dot-operators are lowercased; strings keep their quotes.
  std::string text;
  int line;  // 1-based physical line

  bool is(std::string_view s) const { return kind != TokenKind::string && text == s; }
  bool ident() const { return kind == TokenKind::identifier; }
};

// One logical statement: continuation lines joined, comments dropped.
struct Statement {
  int first_line = 0;
  int last_line = 0;
  std::vector<Token> tokens;
};

// Splits free-form source into logical statements. `first_line` offsets line
// numbers so a unit's text can be lexed with its file coordinates.
// Preprocessor lines (leading '#') are skipped.
std::vector<Statement> lex_statements(std::string_view text, int first_line = 1);

// Throws NonUtf8Source on the first malformed sequence.
void validate_utf8(std::string_view text, const std::string& file);

// Heuristic for F77 column conventions: a '*' in column 1, or a 'c'/'C' in
// column 1 followed by whitespace that is not an assignment to a variable c.
// Returns the 1-based offending line or 0.
int find_fixed_form_line(std::string_view text);

// Type keywords that may start a declaration or a function prefix.
bool is_type_keyword(std::string_view word);

}  // namespace ftrans::fortran
