#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ftrans {

struct OracleCase {
  std::string unit;
  std::vector<double> args;
  std::optional<double> expected;  // nullopt: NaN expected
  double tol = 1e-3;
  std::string source;  // "published" or "oracle"
};

struct CorpusEntry {
  std::string name;
  std::filesystem::path dir;
  std::filesystem::path fortran_source;
  std::filesystem::path fortran_tests;
  std::map<std::string, std::filesystem::path> golden_sources;  // unit -> file
  std::map<std::string, std::filesystem::path> golden_tests;
  std::map<std::string, std::vector<std::string>> signatures;
  std::vector<OracleCase> oracle;
};

// sha256 of every file below root except checksums.json, keyed by relative
// path.
std::map<std::string, std::string> compute_checksums(const std::filesystem::path& root);

// Enumerates <root>/<entry>/ directories after verifying every file against
// <root>/checksums.json. Throws ChecksumMismatch for a changed, missing or
// unlisted file and IoError when the manifest is absent.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root);
std::vector<CorpusEntry> load_corpus();

const CorpusEntry* find_entry(const std::vector<CorpusEntry>& entries, const std::string& name);

// Native reference value of a corpus unit at `args` (argument order as in the
// Fortran source). NaN propagates. Throws UnknownUnit.
double reference_value(const std::string& unit, const std::vector<double>& args);
bool has_reference(const std::string& unit);

struct OracleMismatch {
  std::string unit;
  std::vector<double> args;
  double expected;
  double actual;  // NaN when the call raised
  std::string error;
};

// Imports each <unit>.py found in `dir` with python3 and compares it against
// reference_value on every oracle input of the loaded corpus. Units without
// a file are skipped; `checked` receives the units compared.
std::vector<OracleMismatch> verify_translations(const std::filesystem::path& dir,
                                                const std::vector<CorpusEntry>& corpus,
                                                std::vector<std::string>* checked = nullptr,
                                                const std::string& python = "python3");

}  // namespace ftrans
