#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ftrans {

enum class Verdict { all_passed, some_failed, crashed, timed_out };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct HarnessConfig {
  std::vector<std::string> test_command{"python3", "-m", "pytest", "-q", "-p", "no:cacheprovider"};
  // Applied to every output line; group 1 is a count, group 2 its label.
  std::string summary_regex = R"((\d+) (passed|failed|errors?)\b)";
  double timeout_seconds = 120.0;
  std::vector<std::string> sandbox_wrapper;  // argv prefix, e.g. a container runner
  std::vector<std::string> env_allowlist{"PATH", "HOME", "LANG", "LC_ALL", "TMPDIR",
                                         "PYTHONPATH", "VIRTUAL_ENV"};
  std::size_t failure_context_chars = 6000;
};

struct TestRun {
  std::filesystem::path workdir;
  std::vector<std::string> command;
  double timeout_seconds = 120.0;
  std::vector<std::string> env_allowlist;
  std::vector<std::string> sandbox_wrapper;
  std::string summary_regex = HarnessConfig{}.summary_regex;
  // Trees that must be unchanged after the run (integration isolation check).
  std::vector<std::filesystem::path> guarded_paths;

  static TestRun from_config(const HarnessConfig& cfg, std::filesystem::path workdir);
};

struct TestReport {
  int passed = 0;
  int failed = 0;
  int errored = 0;
  int exit_code = 0;
  std::string stdout_tail;  // last 200 lines
  std::string stderr_tail;
  std::string summary_line;
  std::string workdir;
  double duration = 0.0;
  Verdict verdict = Verdict::crashed;
  bool sandbox_violation = false;

  bool operator==(const TestReport&) const = default;
};

nlohmann::json to_json(const TestReport& r);
TestReport report_from_json(const nlohmann::json& j);

// Pure classification of captured runner output.
TestReport classify_output(const std::string& out, const std::string& err, int exit_code,
                           bool timed_out, double duration, const std::string& summary_regex);

// Spawns the command in its own process group with `workdir` as CWD and an
// environment reduced to the allowlist; kills the group on timeout.
// Throws RunnerNotFound or WorkdirSetupFailed.
TestReport run_tests(const TestRun& run);

// Recreates `dir` holding exactly <unit>.py, test_<unit>.py and
// fixtures/<dep>.py. The unit source gets a header putting fixtures/ on
// sys.path and star-importing each direct dependency; the test file gets
// `from <unit> import *`. Throws WorkdirSetupFailed.
void prepare_workdir(const std::filesystem::path& dir, const std::string& unit,
                     const std::string& source, const std::string& tests,
                     const std::map<std::string, std::string>& fixtures,
                     const std::vector<std::string>& direct_dependencies);

// Text for the repair prompt's test-results slot: stderr tail, stdout tail
// and the summary line last, truncated from the front to `budget` chars.
// Run-specific tokens (workdir path, durations) are normalized so identical
// failures produce identical prompts. Unfenced: the repair template supplies
// the fence. Throws ContractViolation for an all_passed report.
std::string format_failure_context(const TestReport& report, std::size_t budget = 6000);

}  // namespace ftrans
