#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftrans/dep_graph.hpp"
#include "ftrans/fortran_units.hpp"
#include "ftrans/llm_gateway.hpp"
#include "ftrans/prompt_engine.hpp"
#include "ftrans/test_harness.hpp"

namespace ftrans {

enum class UnitStatus { pending, blocked, translating, passed, failed, waived };
std::string_view to_string(UnitStatus s);
UnitStatus unit_status_from_string(std::string_view s);

struct Attempt {
  int index = 0;
  std::vector<std::string> exchanges;  // request digests, in call order
  std::string candidate_source;
  std::string candidate_tests;
  std::optional<TestReport> report;  // absent when the attempt failed before running tests
  std::string error;
  double duration_seconds = 0.0;

  bool operator==(const Attempt&) const = default;
};

// State of one translation chunk: a single unit, or a strongly connected
// group translated together (keyed "a+b", module named after its first
// member).
struct UnitState {
  std::vector<std::string> members;
  UnitStatus status = UnitStatus::pending;
  std::string reason;  // token_budget | dependency_failed for blocked units
  std::vector<Attempt> attempts;
  std::optional<std::string> final_source;
  std::optional<std::string> final_tests;
  std::optional<std::string> fortran_tests;
  bool fortran_tests_generated = false;
  int provider_calls = 0;
  std::string last_error;

  bool operator==(const UnitState&) const = default;
};

struct SessionEvent {
  long seq = 0;
  std::string time;
  std::string unit;
  UnitStatus from = UnitStatus::pending;
  UnitStatus to = UnitStatus::pending;

  bool operator==(const SessionEvent&) const = default;
};

struct SessionSettings {
  int token_budget = 8000;
  int max_iters = 5;
  HarnessConfig harness;
  nlohmann::json snapshot = nlohmann::json::object();  // recorded verbatim
};

struct TranslationSession {
  std::string session_id;
  std::string codebase_root;
  std::vector<fortran::SourceUnit> units;
  DependencyGraph graph;
  TranslationOrder order;  // unit names
  std::vector<std::string> chunks;  // chunk key per order group
  std::map<std::string, UnitState> unit_states;  // chunk key -> state
  int token_budget = 8000;
  int max_iters = 5;
  HarnessConfig harness;
  nlohmann::json config;
  std::string created;
  std::string updated;
  std::vector<SessionEvent> events;
};

inline constexpr int kSessionSchemaVersion = 1;

nlohmann::json session_to_json(const TranslationSession& s);
TranslationSession session_from_json(const nlohmann::json& j);

std::string chunk_key(const std::vector<std::string>& members);
// Chunk keys of the groups the chunk depends on, in order position.
std::vector<std::string> chunk_dependencies(const TranslationSession& s, const std::string& chunk);
// Chunk holding unit `name`. Throws UnknownUnit.
std::string chunk_of(const TranslationSession& s, const std::string& name);

// Scans, builds the graph and orders. Chunks above the token budget start
// blocked(token_budget). Throws EmptyCodebase plus scan and graph errors.
TranslationSession plan_session(const std::filesystem::path& root, const SessionSettings& settings);

// {schema_version, checksum, session} written by atomic rename.
void save_session(const TranslationSession& s, const std::filesystem::path& file);

// Loads a saved session. Chunks caught in `translating` go back to pending
// with their completed attempts kept. Throws SchemaMismatch, CorruptSession.
TranslationSession resume(const std::filesystem::path& file);

// First chunk in order that is pending with every dependency passed or
// waived.
std::optional<std::string> next_eligible(const TranslationSession& s);

// Marks a failed or blocked chunk waived, keeping its last candidate as the
// final output, and releases dependents. Throws UnknownUnit.
void waive(TranslationSession& s, const std::string& unit);

// Python module text for a passed or waived chunk: star imports of its
// direct dependencies followed by the final source.
std::string module_source(const TranslationSession& s, const std::string& chunk);

// Writes out/<unit>.py, out/tests/test_<unit>.py, out/fortran_tests/<unit>.pf
// for passed and waived chunks plus out/manifest.json; returns the manifest.
nlohmann::json emit_outputs(const TranslationSession& s, const std::filesystem::path& out_dir);

// Exclusive ownership of a session file via <file>.lock holding the owner
// PID. A lock left by a dead process is taken over. Throws SessionLocked.
class SessionLock {
public:
  explicit SessionLock(std::filesystem::path session_file);
  ~SessionLock();
  SessionLock(const SessionLock&) = delete;
  SessionLock& operator=(const SessionLock&) = delete;

private:
  std::filesystem::path path_;
};

// Thrown by test interrupt hooks to abandon a run at a persistence point.
struct Interrupted {
  int point = 0;
};

struct RunOptions {
  std::filesystem::path session_file;  // empty: nothing persisted
  std::filesystem::path work_dir;      // harness workdirs; default under the temp dir
  int workers = 1;
  // Restrict the run to these units and what they depend on.
  std::set<std::string> only_units;
  // Called after every persisted transition with a running count.
  std::function<void(int)> on_persist;
};

class Orchestrator {
public:
  Orchestrator(TranslationSession& session, ChatClient& client, PromptLibrary prompts,
               RunOptions options);

  // Runs the pipeline for one chunk until it passes or max_iters attempts
  // are spent. A passed chunk is left untouched. Provider, parse and harness
  // errors end the attempt and are recorded in it.
  UnitState translate_unit(const std::string& chunk);

  // Translates every eligible chunk in order (in parallel waves when
  // workers > 1); failed chunks block their dependents.
  void run();

  void persist();

private:
  void transition(const std::string& chunk, UnitStatus to, const std::string& reason = {});
  void refresh_blocking();
  std::map<std::string, std::string> fixtures_for(const std::string& chunk) const;
  std::vector<std::string> dependency_modules(const std::string& chunk) const;
  std::string chunk_text(const std::string& chunk) const;
  // One provider round trip; `budget` caps the calls of a single attempt.
  std::string call(UnitState& work, Attempt& attempt, int& budget, PromptTask task,
                   const SlotMap& slots);

  TranslationSession& s_;
  ChatClient& client_;
  PromptLibrary prompts_;
  RunOptions opt_;
  std::recursive_mutex mutex_;
  int persist_count_ = 0;
};

}  // namespace ftrans
