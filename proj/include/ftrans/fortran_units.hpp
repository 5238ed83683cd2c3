#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ftrans::fortran {

enum class UnitKind { function, subroutine, derived_type, module_variable_block };

std::string_view to_string(UnitKind kind);
UnitKind unit_kind_from_string(std::string_view s);

struct LineSpan {
  int start = 0;  // 1-based, inclusive
  int end = 0;    // inclusive
  bool operator==(const LineSpan&) const = default;
};

// One independently testable chunk of Fortran source.
struct SourceUnit {
  std::string id;    // "path::name"
  std::string name;  // canonical lowercase
  UnitKind kind = UnitKind::function;
  std::string file;  // path relative to the scan root
  LineSpan lines;
  std::string text;  // verbatim slice of the file covering `lines`
  std::string doc;   // comment block immediately above the unit
  std::set<std::string> attributes;       // subset of {elemental, pure, recursive}
  std::vector<std::string> references;    // canonical names, first-occurrence order

  bool operator==(const SourceUnit&) const = default;
};

struct TokenEstimate {
  std::string unit_id;
  long approx_tokens = 0;
};

// Chunks one free-form source file into units in source order. Contained
// procedures become separate units and the container's text stops before its
// `contains` statement. Module-level declarations form a module_variable_block
// named after the module, covering the declarations that follow the module's
// last derived type. References are traced against the names defined in this
// file only; scan_tree retraces against the whole codebase.
//
// Throws UnbalancedBlock, NonUtf8Source or FixedFormSource.
std::vector<SourceUnit> scan_file(const std::string& path, std::string_view text);

// Known names that occur in the unit as identifiers outside comments, string
// literals and the unit's own header. Declared entity names in type
// declarations and component names after '%' do not count. Both sides of a
// `use ..., only: a => b` rename count. Over-approximates (keyword argument
// names are counted).
std::vector<std::string> trace_references(const SourceUnit& unit,
                                          const std::set<std::string>& known_names);

TokenEstimate estimate_tokens(const SourceUnit& unit);

struct ScanOptions {
  std::vector<std::string> extensions{".f90", ".F90", ".f95"};
};

// Scans every matching file below `root` (sorted by path) and traces
// references against the union of all unit names.
std::vector<SourceUnit> scan_tree(const std::filesystem::path& root,
                                  const ScanOptions& options = {});

// Reference kind of an edge, determined by the kind of the referenced unit.
std::string_view reference_kind(UnitKind target);

// Units manifest: array of {id, name, kind, file, start_line, end_line,
// attributes, references:[{name, kind}], approx_tokens[, doc, text]}.
nlohmann::json units_manifest(const std::vector<SourceUnit>& units, bool inline_text);

// Restricts a pFUnit test module to the @Test procedures that mention `unit`.
// Returns the module preamble, the selected procedures and the module end, or
// an empty string when no test mentions the unit.
std::string select_tests_for_unit(std::string_view pf_text, std::string_view unit);

// All .pf files below root, keyed by path relative to root.
std::map<std::string, std::string> find_test_files(const std::filesystem::path& root);

}  // namespace ftrans::fortran
