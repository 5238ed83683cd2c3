#include "ftrans/fortran_units.hpp"

#include <algorithm>
#include <optional>

#include "ftrans/error.hpp"
#include "ftrans/fortran_lexer.hpp"
#include "ftrans/util.hpp"

namespace ftrans::fortran {

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::function: return "function";
    case UnitKind::subroutine: return "subroutine";
    case UnitKind::derived_type: return "derived_type";
    case UnitKind::module_variable_block: return "module_variable_block";
  }
  return "function";
}

UnitKind unit_kind_from_string(std::string_view s) {
  if (s == "function") return UnitKind::function;
  if (s == "subroutine") return UnitKind::subroutine;
  if (s == "derived_type") return UnitKind::derived_type;
  if (s == "module_variable_block") return UnitKind::module_variable_block;
  throw Error("unknown unit kind: " + std::string(s));
}

namespace {

enum class Stmt {
  other,
  function_header,
  subroutine_header,
  module_header,
  submodule_header,
  program_header,
  type_header,
  interface_header,
  blockdata_header,
  contains,
  end_unit,
  end_construct,
  use,
  implicit,
  access,
  declaration,
  spec_other,  // parameter, common, data, ... : module-level specifications
};

struct Classified {
  Stmt kind = Stmt::other;
  std::string name;
  std::set<std::string> attributes;
  std::string end_keyword;  // for end_unit: "", "function", "module", ...
  std::size_t body = 0;     // index of first token after label / construct name
};

using Tokens = std::vector<Token>;

// Index just past a balanced parenthesis group starting at tokens[i] == "(".
std::size_t skip_parens(const Tokens& t, std::size_t i) {
  int depth = 0;
  for (; i < t.size(); ++i) {
    if (t[i].is("(") || t[i].is("(/")) ++depth;
    else if (t[i].is(")") || t[i].is("/)")) {
      if (--depth == 0) return i + 1;
    }
  }
  return i;
}

// Index past a type-spec starting at i, or i when there is none.
std::size_t skip_type_spec(const Tokens& t, std::size_t i) {
  if (i >= t.size() || !t[i].ident() || !is_type_keyword(t[i].text)) return i;
  const std::string& w = t[i].text;
  if ((w == "type" || w == "class") && !(i + 1 < t.size() && t[i + 1].is("("))) return i;
  ++i;
  if (w == "double" && i < t.size() && t[i].is("precision")) ++i;
  if (i < t.size() && t[i].is("(")) return skip_parens(t, i);
  if (i + 1 < t.size() && t[i].is("*")) {
    i += 1;
    if (t[i].is("(")) return skip_parens(t, i);
    return i + 1;
  }
  return i;
}

bool is_construct_end(std::string_view kw) {
  static constexpr std::string_view constructs[] = {
      "do", "if", "select", "where", "associate", "forall", "enum", "critical", "team", "block"};
  return std::find(std::begin(constructs), std::end(constructs), kw) != std::end(constructs);
}

Classified classify(const Statement& s) {
  const Tokens& t = s.tokens;
  Classified c;
  std::size_t i = 0;
  if (i < t.size() && t[i].kind == TokenKind::number) ++i;  // statement label
  if (i + 1 < t.size() && t[i].ident() && t[i + 1].is(":")) i += 2;  // construct name
  c.body = i;
  if (i >= t.size()) return c;
  const std::size_t n = t.size();
  const std::string& w = t[i].text;
  if (!t[i].ident()) return c;

  // end statements
  if (w.rfind("end", 0) == 0 && !(i + 1 < n && (t[i + 1].is("=") || t[i + 1].is("(") ||
                                                   t[i + 1].is("%")))) {
    std::string kw;
    if (w == "end") {
      if (i + 1 < n && t[i + 1].ident()) kw = t[i + 1].text;
      if (kw == "block" && i + 2 < n && t[i + 2].is("data")) kw = "blockdata";
    } else {
      kw = w.substr(3);
      if (kw == "block" && i + 1 < n && t[i + 1].is("data")) kw = "blockdata";
    }
    static constexpr std::string_view unit_kws[] = {"",        "function",  "subroutine",
                                                    "module",  "submodule", "program",
                                                    "type",    "interface", "blockdata",
                                                    "procedure"};
    bool known_end = w == "end" || std::find(std::begin(unit_kws), std::end(unit_kws), kw) !=
                                       std::end(unit_kws) || is_construct_end(kw);
    if (known_end) {
      if (is_construct_end(kw) || kw == "procedure") {
        c.kind = Stmt::end_construct;
      } else {
        c.kind = Stmt::end_unit;
        c.end_keyword = kw;
      }
      return c;
    }
  }

  if (w == "contains" && n == i + 1) {
    c.kind = Stmt::contains;
    return c;
  }
  if (w == "use") {
    c.kind = Stmt::use;
    return c;
  }
  if (w == "implicit") {
    c.kind = Stmt::implicit;
    return c;
  }
  if ((w == "private" || w == "public" || w == "save" || w == "import" || w == "sequence") &&
      (i + 1 == n || t[i + 1].is("::") || t[i + 1].ident())) {
    c.kind = Stmt::access;
    return c;
  }
  if (w == "interface" || (w == "abstract" && i + 1 < n && t[i + 1].is("interface"))) {
    c.kind = Stmt::interface_header;
    return c;
  }
  if (w == "module" && i + 2 == n && t[i + 1].ident() && t[i + 1].text != "procedure" &&
      t[i + 1].text != "function" && t[i + 1].text != "subroutine") {
    c.kind = Stmt::module_header;
    c.name = t[i + 1].text;
    return c;
  }
  if (w == "submodule" && i + 1 < n && t[i + 1].is("(")) {
    std::size_t j = skip_parens(t, i + 1);
    if (j < n && t[j].ident()) {
      c.kind = Stmt::submodule_header;
      c.name = t[j].text;
      return c;
    }
  }
  if (w == "program" && i + 2 == n && t[i + 1].ident()) {
    c.kind = Stmt::program_header;
    c.name = t[i + 1].text;
    return c;
  }
  if (w == "block" && i + 1 < n && t[i + 1].is("data")) {
    c.kind = Stmt::blockdata_header;
    c.name = i + 2 < n ? t[i + 2].text : "";
    return c;
  }
  if (w == "blockdata") {
    c.kind = Stmt::blockdata_header;
    c.name = i + 1 < n ? t[i + 1].text : "";
    return c;
  }
  // derived type definition: type :: name | type name | type, attrs :: name
  if (w == "type" && i + 1 < n && !t[i + 1].is("(") && !t[i + 1].is("is")) {
    if (t[i + 1].is("::") && i + 2 < n && t[i + 2].ident()) {
      c.kind = Stmt::type_header;
      c.name = t[i + 2].text;
      return c;
    }
    if (t[i + 1].ident() && (i + 2 == n || t[i + 2].is("("))) {
      c.kind = Stmt::type_header;
      c.name = t[i + 1].text;
      return c;
    }
    if (t[i + 1].is(",")) {
      for (std::size_t j = i + 2; j + 1 < n; ++j) {
        if (t[j].is("::") && t[j + 1].ident()) {
          c.kind = Stmt::type_header;
          c.name = t[j + 1].text;
          return c;
        }
      }
    }
  }

  // procedure headers with prefixes
  {
    std::size_t j = i;
    std::set<std::string> attrs;
    while (j < n && t[j].ident()) {
      const std::string& p = t[j].text;
      if (p == "elemental" || p == "pure" || p == "recursive") {
        attrs.insert(p);
        ++j;
      } else if (p == "impure" || p == "non_recursive" || p == "module") {
        ++j;
      } else {
        std::size_t k = skip_type_spec(t, j);
        if (k == j) break;
        j = k;
      }
    }
    if (j + 1 < n && t[j].ident() && t[j + 1].ident() &&
        (t[j].text == "function" || t[j].text == "subroutine") &&
        (j + 2 == n || t[j + 2].is("(") || t[j + 2].is("bind"))) {
      c.kind = t[j].text == "function" ? Stmt::function_header : Stmt::subroutine_header;
      c.name = t[j + 1].text;
      c.attributes = std::move(attrs);
      return c;
    }
  }

  // type declarations
  if (is_type_keyword(w)) {
    std::size_t j = skip_type_spec(t, i);
    if (j != i) {
      bool has_colons = false;
      int depth = 0;
      for (std::size_t k = j; k < n; ++k) {
        if (t[k].is("(") || t[k].is("(/")) ++depth;
        else if (t[k].is(")") || t[k].is("/)")) --depth;
        else if (depth == 0 && t[k].is("::")) has_colons = true;
      }
      if (has_colons || (j < n && t[j].ident())) {
        c.kind = Stmt::declaration;
        return c;
      }
    }
  }
  static constexpr std::string_view spec_words[] = {
      "parameter", "common", "data", "namelist", "equivalence", "dimension",
      "allocatable", "target", "pointer", "protected", "external", "intrinsic", "enum",
      "enumerator", "procedure"};
  if (std::find(std::begin(spec_words), std::end(spec_words), w) != std::end(spec_words)) {
    c.kind = Stmt::spec_other;
  }
  return c;
}

bool is_header(Stmt k) {
  return k == Stmt::function_header || k == Stmt::subroutine_header ||
         k == Stmt::module_header || k == Stmt::submodule_header ||
         k == Stmt::program_header || k == Stmt::type_header || k == Stmt::blockdata_header;
}

std::string_view end_keyword_for(Stmt k) {
  switch (k) {
    case Stmt::function_header: return "function";
    case Stmt::subroutine_header: return "subroutine";
    case Stmt::module_header: return "module";
    case Stmt::submodule_header: return "submodule";
    case Stmt::program_header: return "program";
    case Stmt::type_header: return "type";
    case Stmt::interface_header: return "interface";
    case Stmt::blockdata_header: return "blockdata";
    default: return "";
  }
}

struct Frame {
  Stmt kind;
  std::string name;
  std::set<std::string> attributes;
  int header_line = 0;
  int contains_line = 0;
  int last_type_end = 0;
  bool in_interface = false;
  bool is_unit = false;
  std::vector<int> declaration_lines;  // module spec part only
};

class FileText {
public:
  explicit FileText(std::string_view text) : text_(text) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\n' && i + 1 < text.size()) starts_.push_back(i + 1);
    }
    starts_.push_back(text.size());
  }
  int line_count() const { return static_cast<int>(starts_.size()) - 1; }
  std::string slice(int first, int last) const {
    std::size_t b = starts_[first - 1];
    std::size_t e = starts_[last];
    return std::string(text_.substr(b, e - b));
  }
  std::string_view line(int n) const {
    auto s = text_.substr(starts_[n - 1], starts_[n] - starts_[n - 1]);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

private:
  std::string_view text_;
  std::vector<std::size_t> starts_;
};

bool comment_line(std::string_view l) {
  auto p = l.find_first_not_of(" \t");
  return p != std::string_view::npos && l[p] == '!';
}

std::string leading_doc(const FileText& file, int header_line) {
  int first = header_line;
  while (first > 1 && comment_line(file.line(first - 1))) --first;
  if (first == header_line) return {};
  return file.slice(first, header_line - 1);
}

bool type_allows_unit(const std::vector<Frame>& stack) {
  if (stack.empty()) return true;
  const Frame& parent = stack.back();
  if (parent.in_interface || parent.kind == Stmt::interface_header) return false;
  return parent.kind == Stmt::module_header || parent.kind == Stmt::submodule_header ||
         parent.kind == Stmt::program_header;
}

}  // namespace

std::vector<SourceUnit> scan_file(const std::string& path, std::string_view text) {
  validate_utf8(text, path);
  if (int line = find_fixed_form_line(text)) throw FixedFormSource(path, line);

  FileText file(text);
  std::vector<Statement> statements = lex_statements(text);
  std::vector<Frame> stack;
  std::vector<SourceUnit> units;

  auto make_unit = [&](const Frame& f, UnitKind kind, int first, int last) {
    SourceUnit u;
    u.name = f.name;
    u.id = path + "::" + f.name;
    u.kind = kind;
    u.file = path;
    u.lines = {first, last};
    u.text = file.slice(first, last);
    u.doc = leading_doc(file, first);
    u.attributes = f.attributes;
    units.push_back(std::move(u));
  };

  for (const Statement& s : statements) {
    Classified c = classify(s);
    if (is_header(c.kind) || c.kind == Stmt::interface_header) {
      Frame f;
      f.kind = c.kind;
      f.name = c.name;
      f.attributes = c.attributes;
      f.header_line = s.first_line;
      f.in_interface = !stack.empty() && (stack.back().in_interface ||
                                          stack.back().kind == Stmt::interface_header);
      if (c.kind == Stmt::function_header || c.kind == Stmt::subroutine_header) {
        f.is_unit = !f.in_interface;
      } else if (c.kind == Stmt::type_header) {
        f.is_unit = type_allows_unit(stack);
      }
      stack.push_back(std::move(f));
      continue;
    }
    if (c.kind == Stmt::contains) {
      if (stack.empty()) throw UnbalancedBlock(path, s.first_line, "'contains' outside any unit");
      stack.back().contains_line = s.first_line;
      continue;
    }
    if (c.kind == Stmt::end_unit) {
      if (stack.empty()) throw UnbalancedBlock(path, s.first_line, "'end' without opener");
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (!c.end_keyword.empty() && c.end_keyword != end_keyword_for(f.kind)) {
        throw UnbalancedBlock(path, s.first_line,
                              "'end " + c.end_keyword + "' closes " +
                                  std::string(end_keyword_for(f.kind)) + " '" + f.name +
                                  "' opened at line " + std::to_string(f.header_line));
      }
      const int end_line = s.last_line;
      if (f.is_unit && (f.kind == Stmt::function_header || f.kind == Stmt::subroutine_header)) {
        int last = f.contains_line ? f.contains_line - 1 : end_line;
        make_unit(f,
                  f.kind == Stmt::function_header ? UnitKind::function : UnitKind::subroutine,
                  f.header_line, std::max(last, f.header_line));
      } else if (f.is_unit && f.kind == Stmt::type_header) {
        make_unit(f, UnitKind::derived_type, f.header_line, end_line);
        if (!stack.empty()) stack.back().last_type_end = end_line;
      } else if (f.kind == Stmt::module_header || f.kind == Stmt::submodule_header) {
        int first = f.last_type_end ? f.last_type_end + 1 : f.header_line;
        int last = f.contains_line ? f.contains_line - 1 : end_line;
        bool has_decl = std::any_of(f.declaration_lines.begin(), f.declaration_lines.end(),
                                    [&](int l) { return l >= first && l <= last; });
        if (has_decl && first <= last) {
          Frame block = f;
          block.attributes.clear();
          make_unit(block, UnitKind::module_variable_block, first, last);
        }
      }
      continue;
    }
    if (!stack.empty()) {
      Frame& top = stack.back();
      if ((top.kind == Stmt::module_header || top.kind == Stmt::submodule_header) &&
          top.contains_line == 0 &&
          (c.kind == Stmt::declaration || c.kind == Stmt::spec_other)) {
        top.declaration_lines.push_back(s.first_line);
      }
    }
  }
  if (!stack.empty()) {
    const Frame& f = stack.back();
    throw UnbalancedBlock(path, f.header_line,
                          "end of file inside " + std::string(end_keyword_for(f.kind)) + " '" +
                              f.name + "'");
  }

  std::stable_sort(units.begin(), units.end(),
                   [](const SourceUnit& a, const SourceUnit& b) { return a.lines.start < b.lines.start; });

  std::set<std::string> local;
  for (const auto& u : units) local.insert(u.name);
  for (auto& u : units) u.references = trace_references(u, local);
  return units;
}

std::vector<std::string> trace_references(const SourceUnit& unit,
                                          const std::set<std::string>& known_names) {
  std::vector<std::string> refs;
  std::set<std::string> seen;
  auto note = [&](const Token& tok) {
    if (!tok.ident() || tok.text == unit.name) return;
    if (!known_names.count(tok.text) || seen.count(tok.text)) return;
    seen.insert(tok.text);
    refs.push_back(tok.text);
  };

  std::vector<Statement> statements = lex_statements(unit.text, unit.lines.start);
  bool first = true;
  for (const Statement& s : statements) {
    Classified c = classify(s);
    bool skip_header = first && is_header(c.kind);
    first = false;
    if (skip_header || c.kind == Stmt::end_unit || c.kind == Stmt::end_construct ||
        c.kind == Stmt::implicit || c.kind == Stmt::contains) {
      continue;
    }
    const Tokens& t = s.tokens;
    if (c.kind == Stmt::type_header) {
      // nested definition: the defined name is not a reference, parents are
      for (std::size_t k = c.body; k < t.size(); ++k) {
        if (t[k].text != c.name) note(t[k]);
      }
      continue;
    }
    if (c.kind == Stmt::declaration) {
      std::size_t j = skip_type_spec(t, c.body);
      for (std::size_t k = c.body; k < j; ++k) note(t[k]);
      // attributes up to '::', then the entity list
      std::size_t k = j;
      bool has_colons = false;
      {
        int depth = 0;
        for (std::size_t m = j; m < t.size(); ++m) {
          if (t[m].is("(") || t[m].is("(/")) ++depth;
          else if (t[m].is(")") || t[m].is("/)")) --depth;
          else if (depth == 0 && t[m].is("::")) {
            has_colons = true;
            for (std::size_t a = j; a < m; ++a) note(t[a]);
            k = m + 1;
            break;
          }
        }
      }
      if (!has_colons) k = j;
      int depth = 0;
      bool entity_position = true;
      for (; k < t.size(); ++k) {
        const Token& tok = t[k];
        if (tok.is("(") || tok.is("(/") || tok.is("[")) ++depth;
        else if (tok.is(")") || tok.is("/)") || tok.is("]")) --depth;
        if (depth == 0 && tok.is(",")) {
          entity_position = true;
          continue;
        }
        if (entity_position && tok.ident() && depth == 0) {
          entity_position = false;
          continue;
        }
        entity_position = false;
        if (k > 0 && t[k - 1].is("%")) continue;
        note(tok);
      }
      continue;
    }
    for (std::size_t k = c.body; k < t.size(); ++k) {
      if (k > 0 && t[k - 1].is("%")) continue;
      note(t[k]);
    }
  }
  return refs;
}

TokenEstimate estimate_tokens(const SourceUnit& unit) {
  long n = static_cast<long>(unit.text.size());
  return {unit.id, (n + 3) / 4};
}

std::vector<SourceUnit> scan_tree(const std::filesystem::path& root, const ScanOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (std::find(options.extensions.begin(), options.extensions.end(), ext) !=
        options.extensions.end()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<SourceUnit> units;
  for (const auto& f : files) {
    auto rel = fs::relative(f, root).generic_string();
    auto found = scan_file(rel, read_file(f));
    std::move(found.begin(), found.end(), std::back_inserter(units));
  }
  std::set<std::string> known;
  for (const auto& u : units) known.insert(u.name);
  for (auto& u : units) u.references = trace_references(u, known);
  return units;
}

std::string_view reference_kind(UnitKind target) {
  switch (target) {
    case UnitKind::derived_type: return "type_use";
    case UnitKind::module_variable_block: return "module_use";
    default: return "call";
  }
}

nlohmann::json units_manifest(const std::vector<SourceUnit>& units, bool inline_text) {
  std::map<std::string, UnitKind> kinds;
  for (const auto& u : units) kinds.emplace(u.name, u.kind);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& u : units) {
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& r : u.references) {
      auto it = kinds.find(r);
      refs.push_back({{"name", r},
                      {"kind", it == kinds.end() ? "external" : reference_kind(it->second)}});
    }
    nlohmann::json j = {{"id", u.id},
                        {"name", u.name},
                        {"kind", to_string(u.kind)},
                        {"file", u.file},
                        {"start_line", u.lines.start},
                        {"end_line", u.lines.end},
                        {"attributes", u.attributes},
                        {"references", refs},
                        {"approx_tokens", estimate_tokens(u).approx_tokens}};
    if (inline_text) {
      j["doc"] = u.doc;
      j["text"] = u.text;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string select_tests_for_unit(std::string_view pf_text, std::string_view unit) {
  auto lines = split_lines(pf_text);
  const std::string wanted = to_lower(unit);
  auto lower_trim = [](const std::string& l) { return to_lower(trim(l)); };

  std::size_t i = 0;
  std::string preamble;
  for (; i < lines.size(); ++i) {
    preamble += lines[i] + "\n";
    if (lower_trim(lines[i]) == "contains") {
      ++i;
      break;
    }
  }
  if (i >= lines.size()) return {};

  std::string selected;
  std::string pending;
  std::string tail;
  while (i < lines.size()) {
    std::string l = lower_trim(lines[i]);
    auto stmts = lex_statements(lines[i]);
    bool opens = !stmts.empty() && classify(stmts.front()).kind == Stmt::subroutine_header;
    if (!opens) {
      pending += lines[i] + "\n";
      ++i;
      continue;
    }
    std::string block = pending;
    pending.clear();
    std::string body;
    for (; i < lines.size(); ++i) {
      block += lines[i] + "\n";
      body += lines[i] + "\n";
      auto st = lex_statements(lines[i]);
      if (!st.empty() && classify(st.front()).kind == Stmt::end_unit) {
        ++i;
        break;
      }
    }
    bool mentions = false;
    for (const auto& st : lex_statements(body)) {
      for (const auto& tok : st.tokens) mentions = mentions || (tok.ident() && tok.text == wanted);
    }
    if (mentions) selected += block;
  }
  tail = pending;
  if (selected.empty()) return {};
  return preamble + selected + tail;
}

std::map<std::string, std::string> find_test_files(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pf") {
      out.emplace(fs::relative(entry.path(), root).generic_string(), read_file(entry.path()));
    }
  }
  return out;
}

}  // namespace ftrans::fortran
