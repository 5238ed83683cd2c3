#include "ftrans/rule_translator.hpp"

#include <map>
#include <set>
#include <vector>

#include "ftrans/fortran_lexer.hpp"
#include "ftrans/util.hpp"

namespace ftrans {

using fortran::Statement;
using fortran::Token;
using fortran::TokenKind;
using Tokens = std::vector<Token>;

namespace {

const std::set<std::string>& python_keywords() {
  static const std::set<std::string> kw{
      "and",   "as",     "assert", "async", "await",  "break", "class",  "continue",
      "def",   "del",    "elif",   "else",  "except", "false", "finally", "for",
      "from",  "global", "if",     "import", "in",    "is",    "lambda", "none",
      "nonlocal", "not", "or",     "pass",  "raise",  "return", "true",  "try",
      "while", "with",   "yield",  "np"};
  return kw;
}

std::string py_name(const std::string& ident) {
  return python_keywords().count(ident) ? ident + "_" : ident;
}

std::string py_number(std::string t) {
  if (auto u = t.find('_'); u != std::string::npos) t.erase(u);
  for (char& c : t) {
    if (c == 'd' || c == 'q') c = 'e';
  }
  if (!t.empty() && t.front() == '.') t.insert(t.begin(), '0');
  return t;
}

std::string py_string(const std::string& s) {
  if (s.size() < 2) return "''";
  char q = s.front();
  std::string body = s.substr(1, s.size() - 2);
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == q && i + 1 < body.size() && body[i + 1] == q) ++i;
    if (body[i] == '\\') out += '\\';
    out += body[i];
  }
  return std::string(1, q) + out + std::string(1, q);
}

std::size_t matching(const Tokens& t, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < t.size(); ++i) {
    const auto& x = t[i];
    if (x.is("(") || x.is("(/") || x.is("[")) ++depth;
    else if (x.is(")") || x.is("/)") || x.is("]")) {
      if (--depth == 0) return i;
    }
  }
  return t.size();
}

// Splits [b, e) at depth-0 commas.
std::vector<std::pair<std::size_t, std::size_t>> split_args(const Tokens& t, std::size_t b,
                                                            std::size_t e) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  int depth = 0;
  std::size_t start = b;
  for (std::size_t i = b; i < e; ++i) {
    const auto& x = t[i];
    if (x.is("(") || x.is("(/") || x.is("[")) ++depth;
    else if (x.is(")") || x.is("/)") || x.is("]")) --depth;
    else if (depth == 0 && x.is(",")) {
      out.push_back({start, i});
      start = i + 1;
    }
  }
  if (start < e || !out.empty()) out.push_back({start, e});
  return out;
}

std::size_t find_top(const Tokens& t, std::size_t b, std::size_t e, std::string_view op) {
  int depth = 0;
  for (std::size_t i = b; i < e; ++i) {
    const auto& x = t[i];
    if (x.is("(") || x.is("(/") || x.is("[")) ++depth;
    else if (x.is(")") || x.is("/)") || x.is("]")) --depth;
    else if (depth == 0 && x.is(op)) return i;
  }
  return e;
}

class ExprWriter {
public:
  std::map<std::string, std::string> names;  // Fortran identifier -> Python expression

  std::string expr(const Tokens& t, std::size_t b, std::size_t e) const {
    std::string out;
    bool operand_before = false;
    for (std::size_t i = b; i < e; ++i) {
      const Token& x = t[i];
      if (x.kind == TokenKind::number) {
        out += py_number(x.text);
        operand_before = true;
      } else if (x.kind == TokenKind::string) {
        out += py_string(x.text);
        operand_before = true;
      } else if (x.ident()) {
        if (i + 1 < e && t[i + 1].is("(")) {
          std::size_t close = std::min(matching(t, i + 1), e);
          out += call(x.text, t, i + 2, close);
          i = close;
        } else if (i + 1 < e && t[i + 1].is("=") && !operand_before) {
          out += x.text + "=";  // keyword argument
          ++i;
          operand_before = false;
          continue;
        } else {
          out += ident(x.text);
        }
        operand_before = true;
      } else if (x.is("(")) {
        std::size_t close = std::min(matching(t, i), e);
        out += "(" + expr(t, i + 1, close) + ")";
        i = close;
        operand_before = true;
      } else if (x.is("(/") || x.is("[")) {
        std::size_t close = std::min(matching(t, i), e);
        out += "np.array([" + list(t, i + 1, close) + "])";
        i = close;
        operand_before = true;
      } else if (x.is("%")) {
        out += ".";
        operand_before = false;
      } else {
        std::string op = binary_op(x.text);
        bool unary = !operand_before && (x.is("-") || x.is("+") || x.is(".not."));
        if (unary) {
          out += x.is(".not.") ? "not " : x.text;
        } else {
          out += " " + op + " ";
        }
        operand_before = false;
      }
    }
    return out;
  }

  std::string list(const Tokens& t, std::size_t b, std::size_t e) const {
    std::string out;
    for (auto [ab, ae] : split_args(t, b, e)) {
      if (!out.empty()) out += ", ";
      out += expr(t, ab, ae);
    }
    return out;
  }

private:
  std::string ident(const std::string& name) const {
    if (auto it = names.find(name); it != names.end()) return it->second;
    if (name == "shr_const_pi") return "np.pi";
    return py_name(name);
  }

  static std::string binary_op(const std::string& op) {
    static const std::map<std::string, std::string> ops{
        {".and.", "and"}, {".or.", "or"},   {".eqv.", "=="}, {".neqv.", "!="},
        {"/=", "!="},     {".eq.", "=="},   {".ne.", "!="},  {".lt.", "<"},
        {".le.", "<="},   {".gt.", ">"},    {".ge.", ">="},  {"//", "+"},
        {".true.", "True"}, {".false.", "False"}};
    auto it = ops.find(op);
    return it == ops.end() ? op : it->second;
  }

  std::string call(const std::string& fn, const Tokens& t, std::size_t b, std::size_t e) const {
    static const std::map<std::string, std::string> direct{
        {"sin", "np.sin"},     {"cos", "np.cos"},       {"tan", "np.tan"},
        {"asin", "np.arcsin"}, {"acos", "np.arccos"},   {"atan", "np.arctan"},
        {"atan2", "np.arctan2"}, {"sinh", "np.sinh"},   {"cosh", "np.cosh"},
        {"tanh", "np.tanh"},   {"exp", "np.exp"},       {"log", "np.log"},
        {"log10", "np.log10"}, {"sqrt", "np.sqrt"},     {"abs", "np.abs"},
        {"min", "np.minimum"}, {"max", "np.maximum"},   {"mod", "np.fmod"},
        {"modulo", "np.mod"},  {"sign", "np.copysign"}, {"floor", "np.floor"},
        {"ceiling", "np.ceil"}, {"any", "np.any"},      {"all", "np.all"},
        {"sum", "np.sum"},     {"size", "np.size"},     {"maxval", "np.max"},
        {"minval", "np.min"},  {"isnan", "np.isnan"},   {"shr_infnan_isnan", "np.isnan"}};
    auto args = split_args(t, b, e);
    if (fn == "epsilon") return "np.finfo(float).eps";
    if (fn == "huge") return "np.finfo(float).max";
    if (fn == "tiny") return "np.finfo(float).tiny";
    if (fn == "real" || fn == "dble" || fn == "int" || fn == "nint") {
      std::string first = args.empty() ? "" : expr(t, args[0].first, args[0].second);
      if (fn == "nint") return "int(np.rint(" + first + "))";
      return (fn == "int" ? "int(" : "float(") + first + ")";
    }
    if ((fn == "min" || fn == "max") && args.size() > 2) {
      // fold n-ary min/max into nested binary ufunc calls
      std::string acc = expr(t, args[0].first, args[0].second);
      for (std::size_t k = 1; k < args.size(); ++k) {
        acc = direct.at(fn) + "(" + acc + ", " + expr(t, args[k].first, args[k].second) + ")";
      }
      return acc;
    }
    std::string head;
    if (auto it = direct.find(fn); it != direct.end() && !names.count(fn)) {
      head = it->second;
    } else {
      head = ident(fn);
    }
    return head + "(" + list(t, b, e) + ")";
  }
};

class Emitter {
public:
  void line(const std::string& text) {
    out_ += std::string(4 * indent_, ' ') + text + "\n";
    if (!bodies_.empty()) bodies_.back() = true;
  }
  void open(const std::string& header) {
    line(header);
    ++indent_;
    bodies_.push_back(false);
  }
  void close() {
    if (!bodies_.empty() && !bodies_.back()) line("pass");
    if (!bodies_.empty()) bodies_.pop_back();
    if (indent_ > 0) --indent_;
  }
  // Closes the current block and reopens a sibling (elif/else).
  void reopen(const std::string& header) {
    close();
    open(header);
  }
  int depth() const { return indent_; }
  void blank() { out_ += "\n"; }
  std::string str() const { return out_; }

private:
  std::string out_;
  int indent_ = 0;
  std::vector<bool> bodies_;
};

bool word(const Tokens& t, std::size_t i, std::string_view w) {
  return i < t.size() && t[i].ident() && t[i].text == w;
}

bool is_end(const Tokens& t, std::string_view kw) {
  if (t.empty() || !t[0].ident()) return false;
  if (t[0].text == "end" + std::string(kw)) return true;
  return t[0].text == "end" && (t.size() == 1 ? kw.empty() : word(t, 1, kw));
}

bool is_declaration(const Tokens& t) {
  if (t.empty() || !t[0].ident() || !fortran::is_type_keyword(t[0].text)) return false;
  if ((t[0].text == "type" || t[0].text == "class") && !(t.size() > 1 && t[1].is("("))) {
    return false;
  }
  if (find_top(t, 0, t.size(), "::") != t.size()) return true;
  // old-style `real x`
  std::size_t i = 1;
  if (i < t.size() && t[i].is("(")) i = matching(t, i) + 1;
  return i < t.size() && t[i].ident() && !word(t, i, "function");
}

struct ProcHeader {
  bool ok = false;
  bool function = false;
  bool elemental = false;
  std::string name;
  std::vector<std::string> args;
  std::string result;
};

ProcHeader parse_header(const Tokens& t) {
  ProcHeader h;
  std::size_t i = 0;
  while (i < t.size() && t[i].ident()) {
    const std::string& w = t[i].text;
    if (w == "end") return h;
    if (w == "function" || w == "subroutine") break;
    if (w == "elemental") h.elemental = true;
    if (fortran::is_type_keyword(w)) {
      ++i;
      if (w == "double" && word(t, i, "precision")) ++i;
      if (i < t.size() && t[i].is("(")) i = matching(t, i) + 1;
      continue;
    }
    ++i;
  }
  if (i + 1 >= t.size() || !t[i + 1].ident()) return h;
  if (!word(t, i, "function") && !word(t, i, "subroutine")) return h;
  h.function = t[i].text == "function";
  h.name = t[i + 1].text;
  i += 2;
  if (i < t.size() && t[i].is("(")) {
    std::size_t close = matching(t, i);
    for (std::size_t k = i + 1; k < close; ++k) {
      if (t[k].ident()) h.args.push_back(t[k].text);
    }
    i = close + 1;
  }
  h.result = h.name;
  if (word(t, i, "result") && i + 2 < t.size() && t[i + 2].ident()) h.result = t[i + 2].text;
  h.ok = true;
  return h;
}

class Translator {
public:
  explicit Translator(std::vector<Statement> stmts) : s_(std::move(stmts)) {}

  std::string fortran_module() {
    em_.line("import numpy as np");
    while (pos_ < s_.size()) {
      const Tokens& t = s_[pos_].tokens;
      ProcHeader h = parse_header(t);
      if (h.ok) {
        procedure(h);
        continue;
      }
      if (is_declaration(t)) {
        declaration(t, false);
      } else if (word(t, 0, "use")) {
        use(t);
      } else if (word(t, 0, "type") && !(t.size() > 1 && t[1].is("("))) {
        skip_until_end("type");
        continue;
      } else if (word(t, 0, "interface") || word(t, 0, "abstract")) {
        skip_until_end("interface");
        continue;
      }
      ++pos_;
    }
    return em_.str();
  }

  std::string pytest_module() {
    em_.line("import numpy as np");
    em_.line("import pytest");
    em_.blank();
    while (pos_ < s_.size()) {
      const Tokens& t = s_[pos_].tokens;
      ProcHeader h = parse_header(t);
      if (h.ok && !h.function) {
        test_procedure(h);
        continue;
      }
      if (is_declaration(t)) declaration(t, false);
      else if (word(t, 0, "use")) use(t);
      ++pos_;
    }
    return em_.str();
  }

private:
  void skip_until_end(std::string_view kw) {
    int depth = 0;
    for (; pos_ < s_.size(); ++pos_) {
      const Tokens& t = s_[pos_].tokens;
      if (is_end(t, kw)) {
        if (--depth == 0) {
          ++pos_;
          return;
        }
      } else if (word(t, 0, std::string(kw)) ||
                 (kw == "interface" && word(t, 0, "abstract"))) {
        ++depth;
      }
    }
  }

  void use(const Tokens& t) {
    // use m, only: a => b, c
    std::size_t only = find_top(t, 0, t.size(), ":");
    if (only == t.size()) return;
    for (auto [b, e] : split_args(t, only + 1, t.size())) {
      if (e - b == 3 && t[b].ident() && t[b + 1].is("=>") && t[b + 2].ident()) {
        const std::string& remote = t[b + 2].text;
        if (remote == "shr_infnan_nan") ex_.names[t[b].text] = "np.nan";
        else if (remote == "shr_const_pi") ex_.names[t[b].text] = "np.pi";
      }
    }
  }

  void declaration(const Tokens& t, bool in_procedure) {
    std::size_t colons = find_top(t, 0, t.size(), "::");
    bool parameter = false;
    for (std::size_t i = 0; i < colons && i < t.size(); ++i) {
      if (word(t, i, "parameter")) parameter = true;
      if (in_procedure && word(t, i, "intent") && i + 2 < t.size() &&
          (word(t, i + 2, "out") || word(t, i + 2, "inout"))) {
        for (auto [b, e] : split_args(t, colons + 1, t.size())) {
          if (b < e && t[b].ident()) outputs_.push_back(t[b].text);
        }
      }
    }
    if (colons == t.size()) return;
    for (auto [b, e] : split_args(t, colons + 1, t.size())) {
      std::size_t eq = find_top(t, b, e, "=");
      if (eq == e || !t[b].ident()) continue;
      (void)parameter;
      em_.line(py_name(t[b].text) + " = " + ex_.expr(t, eq + 1, e));
    }
  }

  void procedure(const ProcHeader& h) {
    ++pos_;
    outputs_.clear();
    em_.blank();
    em_.blank();
    if (h.elemental) em_.line("@np.vectorize");
    std::string params;
    for (const auto& a : h.args) params += (params.empty() ? "" : ", ") + py_name(a);
    em_.open("def " + py_name(h.name) + "(" + params + "):");
    const int base = em_.depth();
    auto saved = ex_.names;
    result_ = h.function ? py_name(h.result) : "";
    body(h.function ? "function" : "subroutine");
    while (em_.depth() > base) em_.close();
    em_.line(return_statement());
    em_.close();
    ex_.names = saved;
  }

  void test_procedure(const ProcHeader& h) {
    ++pos_;
    em_.blank();
    em_.open("def " + py_name(h.name) + "():");
    const int base = em_.depth();
    result_.clear();
    outputs_.clear();
    body("subroutine");
    while (em_.depth() > base) em_.close();
    em_.close();
  }

  std::string return_statement() const {
    if (!result_.empty()) return "return " + result_;
    if (outputs_.empty()) return "return None";
    std::string r;
    for (const auto& o : outputs_) r += (r.empty() ? "" : ", ") + py_name(o);
    return "return " + r;
  }

  void body(std::string_view kind) {
    for (; pos_ < s_.size(); ++pos_) {
      const Tokens& t = s_[pos_].tokens;
      if (is_end(t, kind) || (t.size() == 1 && word(t, 0, "end"))) {
        ++pos_;
        return;
      }
      if (word(t, 0, "contains")) {
        // contained procedures are not part of the subset
        int depth = 1;
        for (++pos_; pos_ < s_.size() && depth > 0; ++pos_) {
          const Tokens& u = s_[pos_].tokens;
          if (parse_header(u).ok) ++depth;
          else if (is_end(u, "function") || is_end(u, "subroutine") ||
                   (u.size() == 1 && word(u, 0, "end"))) {
            --depth;
          }
        }
        return;
      }
      statement(t, 0);
    }
  }

  void statement(const Tokens& t, std::size_t b) {
    const std::size_t n = t.size();
    if (b >= n) return;
    if (t[b].kind == TokenKind::number) return statement(t, b + 1);  // label
    if (b == 0 && is_declaration(t)) return declaration(t, true);
    if (t[b].is("@")) return assertion(t, b + 1);
    if (!t[b].ident()) return unsupported(t);
    const std::string& w = t[b].text;
    if (w == "use") return use(t);
    if (w == "implicit" || w == "save" || w == "private" || w == "public" ||
        w == "continue" || w == "intrinsic" || w == "external") {
      return;
    }
    if (w == "if" && b + 1 < n && t[b + 1].is("(")) {
      std::size_t close = matching(t, b + 1);
      std::string cond = ex_.expr(t, b + 2, close);
      if (close + 1 < n && word(t, close + 1, "then") && close + 2 == n) {
        em_.open("if " + cond + ":");
      } else {
        em_.open("if " + cond + ":");
        statement(t, close + 1);
        em_.close();
      }
      return;
    }
    if ((w == "else" && word(t, b + 1, "if")) || w == "elseif") {
      std::size_t p = w == "else" ? b + 2 : b + 1;
      std::size_t close = matching(t, p);
      em_.reopen("elif " + ex_.expr(t, p + 1, close) + ":");
      return;
    }
    if (w == "else") return em_.reopen("else:");
    if (is_end(t, "if") || is_end(t, "do")) return em_.close();
    if (w == "do" && word(t, b + 1, "while")) {
      std::size_t close = matching(t, b + 2);
      return em_.open("while " + ex_.expr(t, b + 3, close) + ":");
    }
    if (w == "do" && b + 1 == n) return em_.open("while True:");
    if (w == "do" && b + 2 < n && t[b + 1].ident() && t[b + 2].is("=")) {
      auto parts = split_args(t, b + 3, n);
      if (parts.size() < 2) return unsupported(t);
      std::string lo = ex_.expr(t, parts[0].first, parts[0].second);
      std::string hi = ex_.expr(t, parts[1].first, parts[1].second);
      std::string range = "range(" + lo + ", " + hi + " + 1)";
      if (parts.size() == 3) {
        std::string step = ex_.expr(t, parts[2].first, parts[2].second);
        range = "range(" + lo + ", " + hi + " + (1 if " + step + " > 0 else -1), " + step + ")";
      }
      return em_.open("for " + py_name(t[b + 1].text) + " in " + range + ":");
    }
    if (w == "exit") return em_.line("break");
    if (w == "cycle") return em_.line("continue");
    if (w == "return") return em_.line(return_statement());
    if (w == "stop") return em_.line("raise SystemExit(1)");
    if (w == "call" && b + 1 < n) return em_.line(ex_.expr(t, b + 1, n));
    std::size_t eq = find_top(t, b, n, "=");
    if (eq != n && eq > b) {
      return em_.line(ex_.expr(t, b, eq) + " = " + ex_.expr(t, eq + 1, n));
    }
    unsupported(t);
  }

  void assertion(const Tokens& t, std::size_t b) {
    if (b >= t.size() || !t[b].ident()) return;
    std::string kind = t[b].text;
    if (kind == "test") return;
    if (b + 1 >= t.size() || !t[b + 1].is("(")) return unsupported(t);
    std::size_t close = matching(t, b + 1);
    std::vector<std::string> pos;
    std::string tol;
    for (auto [ab, ae] : split_args(t, b + 2, close)) {
      if (ae - ab >= 2 && word(t, ab, "tolerance") && t[ab + 1].is("=")) {
        tol = ex_.expr(t, ab + 2, ae);
      } else if (ae - ab >= 2 && t[ab].ident() && t[ab + 1].is("=")) {
        continue;  // message= and similar
      } else {
        pos.push_back(ex_.expr(t, ab, ae));
      }
    }
    auto need = [&](std::size_t k) { return pos.size() >= k; };
    if (kind == "assertequal" && need(2)) {
      if (pos.size() >= 3 && tol.empty()) tol = pos[2];
      if (tol.empty()) return em_.line("assert np.all(np.equal(" + pos[1] + ", " + pos[0] + "))");
      return em_.line("assert np.allclose(" + pos[1] + ", " + pos[0] + ", rtol=0, atol=" + tol +
                      ")");
    }
    if (kind == "assertrelativelyequal" && need(2)) {
      if (tol.empty() && pos.size() >= 3) tol = pos[2];
      return em_.line("assert np.allclose(" + pos[1] + ", " + pos[0] + ", rtol=" +
                      (tol.empty() ? "1e-5" : tol) + ", atol=0)");
    }
    if (kind == "asserttrue" && need(1)) return em_.line("assert np.all(" + pos[0] + ")");
    if (kind == "assertfalse" && need(1)) return em_.line("assert not np.any(" + pos[0] + ")");
    if (kind == "assertlessthan" && need(2)) {
      return em_.line("assert np.all(" + pos[0] + " < " + pos[1] + ")");
    }
    if (kind == "assertgreaterthan" && need(2)) {
      return em_.line("assert np.all(" + pos[0] + " > " + pos[1] + ")");
    }
    if (kind == "assertisnan" && need(1)) return em_.line("assert np.all(np.isnan(" + pos[0] + "))");
    unsupported(t);
  }

  void unsupported(const Tokens& t) {
    std::string text;
    for (const auto& x : t) text += (text.empty() ? "" : " ") + x.text;
    std::string escaped;
    for (char c : text) {
      if (c == '"' || c == '\\') escaped += '\\';
      escaped += c;
    }
    em_.line("raise NotImplementedError(\"untranslated: " + escaped + "\")");
  }

  std::vector<Statement> s_;
  std::size_t pos_ = 0;
  Emitter em_;
  ExprWriter ex_;
  std::string result_;
  std::vector<std::string> outputs_;
};

}  // namespace

std::string translate_fortran_to_python(std::string_view fortran) {
  return Translator(fortran::lex_statements(fortran)).fortran_module();
}

std::string translate_funit_to_pytest(std::string_view pf) {
  return Translator(fortran::lex_statements(pf)).pytest_module();
}

std::string skeleton_funit_tests(std::string_view fortran) {
  std::string tests;
  for (const auto& s : fortran::lex_statements(fortran)) {
    ProcHeader h = parse_header(s.tokens);
    if (!h.ok || !h.function) continue;
    std::string call = h.name + "(";
    for (std::size_t i = 0; i < h.args.size(); ++i) call += (i ? ", " : "") + std::string("1._r8");
    call += ")";
    tests += "  @Test\n  subroutine test_" + h.name + "_is_deterministic()\n";
    tests += "    @assertTrue(" + call + " == " + call + ")\n";
    tests += "  end subroutine test_" + h.name + "_is_deterministic\n";
  }
  return "module test_generated\n  use funit\n  use shr_kind_mod, only : r8 => shr_kind_r8\n"
         "  implicit none\ncontains\n" +
         tests + "end module test_generated\n";
}

}  // namespace ftrans
