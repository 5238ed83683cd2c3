#include "ftrans/orchestrator.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <exception>
#include <random>
#include <thread>

#include "ftrans/error.hpp"
#include "ftrans/util.hpp"

namespace ftrans {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(UnitStatus s) {
  switch (s) {
    case UnitStatus::pending: return "pending";
    case UnitStatus::blocked: return "blocked";
    case UnitStatus::translating: return "translating";
    case UnitStatus::passed: return "passed";
    case UnitStatus::failed: return "failed";
    case UnitStatus::waived: return "waived";
  }
  return "pending";
}

UnitStatus unit_status_from_string(std::string_view s) {
  for (auto st : {UnitStatus::pending, UnitStatus::blocked, UnitStatus::translating,
                  UnitStatus::passed, UnitStatus::failed, UnitStatus::waived}) {
    if (to_string(st) == s) return st;
  }
  throw Error("unknown unit status: " + std::string(s));
}

// --- serialization -------------------------------------------------------------

namespace {

json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

json unit_json(const fortran::SourceUnit& u) {
  return {{"id", u.id},
          {"name", u.name},
          {"kind", fortran::to_string(u.kind)},
          {"file", u.file},
          {"start_line", u.lines.start},
          {"end_line", u.lines.end},
          {"text", u.text},
          {"doc", u.doc},
          {"attributes", u.attributes},
          {"references", u.references}};
}

fortran::SourceUnit unit_from_json(const json& j) {
  fortran::SourceUnit u;
  u.id = j.at("id");
  u.name = j.at("name");
  u.kind = fortran::unit_kind_from_string(j.at("kind").get<std::string>());
  u.file = j.at("file");
  u.lines.start = j.at("start_line");
  u.lines.end = j.at("end_line");
  u.text = j.at("text");
  u.doc = j.at("doc");
  u.attributes = j.at("attributes").get<std::set<std::string>>();
  u.references = j.at("references").get<std::vector<std::string>>();
  return u;
}

json attempt_json(const Attempt& a) {
  return {{"index", a.index},
          {"exchanges", a.exchanges},
          {"candidate_source", a.candidate_source},
          {"candidate_tests", a.candidate_tests},
          {"report", a.report ? to_json(*a.report) : json(nullptr)},
          {"error", a.error},
          {"duration_seconds", a.duration_seconds}};
}

Attempt attempt_from_json(const json& j) {
  Attempt a;
  a.index = j.at("index");
  a.exchanges = j.at("exchanges").get<std::vector<std::string>>();
  a.candidate_source = j.at("candidate_source");
  a.candidate_tests = j.at("candidate_tests");
  if (!j.at("report").is_null()) a.report = report_from_json(j.at("report"));
  a.error = j.at("error");
  a.duration_seconds = j.at("duration_seconds");
  return a;
}

json state_json(const UnitState& u) {
  json attempts = json::array();
  for (const auto& a : u.attempts) attempts.push_back(attempt_json(a));
  return {{"members", u.members},
          {"status", to_string(u.status)},
          {"reason", u.reason},
          {"attempts", attempts},
          {"final_source", opt_json(u.final_source)},
          {"final_tests", opt_json(u.final_tests)},
          {"fortran_tests", opt_json(u.fortran_tests)},
          {"fortran_tests_generated", u.fortran_tests_generated},
          {"provider_calls", u.provider_calls},
          {"last_error", u.last_error}};
}

UnitState state_from_json(const json& j) {
  UnitState u;
  u.members = j.at("members").get<std::vector<std::string>>();
  u.status = unit_status_from_string(j.at("status").get<std::string>());
  u.reason = j.at("reason");
  for (const auto& a : j.at("attempts")) u.attempts.push_back(attempt_from_json(a));
  u.final_source = opt_string(j.at("final_source"));
  u.final_tests = opt_string(j.at("final_tests"));
  u.fortran_tests = opt_string(j.at("fortran_tests"));
  u.fortran_tests_generated = j.at("fortran_tests_generated");
  u.provider_calls = j.at("provider_calls");
  u.last_error = j.at("last_error");
  return u;
}

json harness_json(const HarnessConfig& h) {
  return {{"test_command", h.test_command},
          {"summary_regex", h.summary_regex},
          {"timeout_seconds", h.timeout_seconds},
          {"sandbox_wrapper", h.sandbox_wrapper},
          {"env_allowlist", h.env_allowlist},
          {"failure_context_chars", h.failure_context_chars}};
}

HarnessConfig harness_from_json(const json& j) {
  HarnessConfig h;
  h.test_command = j.at("test_command").get<std::vector<std::string>>();
  h.summary_regex = j.at("summary_regex");
  h.timeout_seconds = j.at("timeout_seconds");
  h.sandbox_wrapper = j.at("sandbox_wrapper").get<std::vector<std::string>>();
  h.env_allowlist = j.at("env_allowlist").get<std::vector<std::string>>();
  h.failure_context_chars = j.at("failure_context_chars");
  return h;
}

}  // namespace

json session_to_json(const TranslationSession& s) {
  json units = json::array();
  for (const auto& u : s.units) units.push_back(unit_json(u));
  json states = json::object();
  for (const auto& [k, v] : s.unit_states) states[k] = state_json(v);
  json events = json::array();
  for (const auto& e : s.events) {
    events.push_back({{"seq", e.seq},
                      {"time", e.time},
                      {"unit", e.unit},
                      {"from", to_string(e.from)},
                      {"to", to_string(e.to)}});
  }
  return {{"session_id", s.session_id},
          {"codebase_root", s.codebase_root},
          {"units", units},
          {"graph", graph_json(s.graph)},
          {"order", s.order.groups},
          {"chunks", s.chunks},
          {"unit_states", states},
          {"token_budget", s.token_budget},
          {"max_iters", s.max_iters},
          {"harness", harness_json(s.harness)},
          {"config", s.config},
          {"created", s.created},
          {"updated", s.updated},
          {"events", events}};
}

TranslationSession session_from_json(const json& j) {
  TranslationSession s;
  s.session_id = j.at("session_id");
  s.codebase_root = j.at("codebase_root");
  for (const auto& u : j.at("units")) s.units.push_back(unit_from_json(u));
  s.graph = graph_from_json(j.at("graph"));
  s.order.groups = j.at("order").get<std::vector<std::vector<std::string>>>();
  s.chunks = j.at("chunks").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("unit_states").items()) s.unit_states[k] = state_from_json(v);
  s.token_budget = j.at("token_budget");
  s.max_iters = j.at("max_iters");
  s.harness = harness_from_json(j.at("harness"));
  s.config = j.at("config");
  s.created = j.at("created");
  s.updated = j.at("updated");
  for (const auto& e : j.at("events")) {
    s.events.push_back({e.at("seq").get<long>(), e.at("time").get<std::string>(),
                        e.at("unit").get<std::string>(),
                        unit_status_from_string(e.at("from").get<std::string>()),
                        unit_status_from_string(e.at("to").get<std::string>())});
  }
  return s;
}

// --- chunks ------------------------------------------------------------------

std::string chunk_key(const std::vector<std::string>& members) {
  std::string k;
  for (const auto& m : members) k += (k.empty() ? "" : "+") + m;
  return k;
}

std::string chunk_of(const TranslationSession& s, const std::string& name) {
  if (s.unit_states.count(name)) return name;
  for (std::size_t i = 0; i < s.order.groups.size(); ++i) {
    const auto& g = s.order.groups[i];
    if (std::find(g.begin(), g.end(), name) != g.end()) return s.chunks[i];
  }
  throw UnknownUnit(name);
}

namespace {

int chunk_index(const TranslationSession& s, const std::string& chunk) {
  auto it = std::find(s.chunks.begin(), s.chunks.end(), chunk);
  if (it == s.chunks.end()) throw UnknownUnit(chunk);
  return static_cast<int>(it - s.chunks.begin());
}

const fortran::SourceUnit* find_unit(const TranslationSession& s, const std::string& name) {
  for (const auto& u : s.units) {
    if (u.name == name) return &u;
  }
  return nullptr;
}

std::string text_of(const TranslationSession& s, const std::vector<std::string>& members) {
  std::vector<const fortran::SourceUnit*> us;
  for (const auto& m : members) {
    if (const auto* u = find_unit(s, m)) us.push_back(u);
  }
  std::sort(us.begin(), us.end(), [](const auto* a, const auto* b) {
    return std::tie(a->file, a->lines.start) < std::tie(b->file, b->lines.start);
  });
  std::string text;
  for (const auto* u : us) {
    if (!text.empty()) text += "\n";
    text += u->text;
    if (!text.empty() && text.back() != '\n') text += '\n';
  }
  return text;
}

bool settled(UnitStatus st) { return st == UnitStatus::passed || st == UnitStatus::waived; }

void set_status(TranslationSession& s, const std::string& chunk, UnitStatus to,
                const std::string& reason) {
  auto& st = s.unit_states.at(chunk);
  if (st.status == to && st.reason == reason) return;
  SessionEvent e;
  e.seq = s.events.empty() ? 1 : s.events.back().seq + 1;
  e.time = utc_timestamp();
  e.unit = chunk;
  e.from = st.status;
  e.to = to;
  s.events.push_back(e);
  st.status = to;
  st.reason = reason;
  s.updated = e.time;
}

// Dependencies come earlier in order, so one forward pass propagates.
void refresh_blocking(TranslationSession& s) {
  for (const auto& chunk : s.chunks) {
    auto& st = s.unit_states.at(chunk);
    bool dependency_blocked = st.status == UnitStatus::blocked && st.reason == "dependency_failed";
    if (st.status != UnitStatus::pending && !dependency_blocked) continue;
    bool bad = false;
    for (const auto& d : chunk_dependencies(s, chunk)) {
      auto ds = s.unit_states.at(d).status;
      if (ds == UnitStatus::failed || ds == UnitStatus::blocked) bad = true;
    }
    if (bad && !dependency_blocked) set_status(s, chunk, UnitStatus::blocked, "dependency_failed");
    if (!bad && dependency_blocked) set_status(s, chunk, UnitStatus::pending, "");
  }
}

std::string with_newline(std::string s) {
  if (!s.empty() && s.back() != '\n') s += '\n';
  return s;
}

}  // namespace

std::vector<std::string> chunk_dependencies(const TranslationSession& s, const std::string& chunk) {
  int self = chunk_index(s, chunk);
  std::set<int> idx;
  for (const auto& m : s.order.groups[self]) {
    for (const auto& d : s.graph.dependencies(m)) {
      int i = chunk_index(s, chunk_of(s, d));
      if (i != self) idx.insert(i);
    }
  }
  std::vector<std::string> out;
  for (int i : idx) out.push_back(s.chunks[i]);
  return out;
}

// --- planning and persistence -----------------------------------------------------

TranslationSession plan_session(const fs::path& root, const SessionSettings& settings) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  auto units = fortran::scan_tree(root);
  if (units.empty()) throw EmptyCodebase(root.string());

  TranslationSession s;
  s.units = units;
  s.graph = build_graph(units);
  s.order = order_for_translation(s.graph);
  s.codebase_root = fs::absolute(root).lexically_normal().string();
  s.token_budget = settings.token_budget;
  s.max_iters = settings.max_iters;
  s.harness = settings.harness;
  s.config = settings.snapshot;
  s.created = s.updated = utc_timestamp();
  {
    std::random_device rd;
    std::mt19937_64 gen((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    s.session_id = sha256_hex(s.codebase_root + s.created + std::to_string(gen())).substr(0, 16);
  }

  auto test_files = fortran::find_test_files(root);
  for (const auto& group : s.order.groups) {
    std::string key = chunk_key(group);
    s.chunks.push_back(key);
    UnitState st;
    st.members = group;
    std::string tests;
    for (const auto& m : group) {
      for (const auto& [path, text] : test_files) {
        auto selected = fortran::select_tests_for_unit(text, m);
        if (!selected.empty()) {
          tests += (tests.empty() ? "" : "\n") + selected;
          break;
        }
      }
    }
    if (!tests.empty()) st.fortran_tests = tests;
    long tokens = (static_cast<long>(text_of(s, group).size()) + 3) / 4;
    s.unit_states[key] = st;
    if (tokens > settings.token_budget) set_status(s, key, UnitStatus::blocked, "token_budget");
  }
  refresh_blocking(s);
  return s;
}

void save_session(const TranslationSession& s, const fs::path& file) {
  json body = session_to_json(s);
  json doc = {{"schema_version", kSessionSchemaVersion},
              {"checksum", sha256_hex(body.dump())},
              {"session", body}};
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  write_file_atomic(file, doc.dump(1) + "\n");
}

TranslationSession resume(const fs::path& file) {
  if (!fs::exists(file)) throw IoError("session file not found: " + file.string());
  json doc;
  try {
    doc = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw CorruptSession("session file " + file.string() + " is not valid JSON");
  }
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains("session") ||
      !doc.contains("checksum")) {
    throw CorruptSession("session file " + file.string() + " lacks the session envelope");
  }
  if (!doc.at("schema_version").is_number_integer()) throw CorruptSession("bad schema_version");
  int version = doc.at("schema_version");
  if (version != kSessionSchemaVersion) throw SchemaMismatch(version, kSessionSchemaVersion);
  if (sha256_hex(doc.at("session").dump()) != doc.at("checksum")) {
    throw CorruptSession("session checksum mismatch in " + file.string());
  }
  TranslationSession s;
  try {
    s = session_from_json(doc.at("session"));
  } catch (const json::exception& e) {
    throw CorruptSession(std::string("malformed session: ") + e.what());
  }
  for (const auto& chunk : s.chunks) {
    if (s.unit_states.at(chunk).status == UnitStatus::translating) {
      set_status(s, chunk, UnitStatus::pending, "");
    }
  }
  return s;
}

std::optional<std::string> next_eligible(const TranslationSession& s) {
  for (const auto& chunk : s.chunks) {
    if (s.unit_states.at(chunk).status != UnitStatus::pending) continue;
    bool ok = true;
    for (const auto& d : chunk_dependencies(s, chunk)) ok = ok && settled(s.unit_states.at(d).status);
    if (ok) return chunk;
  }
  return std::nullopt;
}

void waive(TranslationSession& s, const std::string& unit) {
  std::string chunk = chunk_of(s, unit);
  auto& st = s.unit_states.at(chunk);
  if (st.status == UnitStatus::waived) return;
  if (st.status != UnitStatus::failed && st.status != UnitStatus::blocked) {
    throw ContractViolation("only failed or blocked units can be waived: " + chunk + " is " +
                            std::string(to_string(st.status)));
  }
  for (auto it = st.attempts.rbegin(); it != st.attempts.rend(); ++it) {
    if (!it->candidate_source.empty()) {
      st.final_source = it->candidate_source;
      if (!it->candidate_tests.empty()) st.final_tests = it->candidate_tests;
      break;
    }
  }
  set_status(s, chunk, UnitStatus::waived, "operator");
  refresh_blocking(s);
}

std::string module_source(const TranslationSession& s, const std::string& chunk) {
  const auto& st = s.unit_states.at(chunk);
  std::string header;
  for (const auto& d : chunk_dependencies(s, chunk)) {
    for (const auto& m : s.unit_states.at(d).members) {
      if (std::find(st.members.begin(), st.members.end(), m) == st.members.end()) {
        header += "from " + m + " import *\n";
      }
    }
  }
  return header + (header.empty() ? "" : "\n") + with_newline(st.final_source.value_or(""));
}

json emit_outputs(const TranslationSession& s, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json entries = json::array();
  int passed = 0;
  int failed = 0;
  for (const auto& chunk : s.chunks) {
    const auto& st = s.unit_states.at(chunk);
    const std::string module = st.members.front();
    double duration = 0.0;
    for (const auto& a : st.attempts) duration += a.duration_seconds;
    json files = json::object();
    if (settled(st.status) && st.final_source) {
      write_file_atomic(out_dir / (module + ".py"), module_source(s, chunk));
      files["source"] = module + ".py";
      for (std::size_t i = 1; i < st.members.size(); ++i) {
        write_file_atomic(out_dir / (st.members[i] + ".py"), "from " + module + " import *\n");
      }
      if (st.final_tests) {
        fs::create_directories(out_dir / "tests");
        std::string header =
            "import os as _os\nimport sys as _sys\n"
            "_sys.path.insert(0, _os.path.dirname(_os.path.dirname(_os.path.abspath(__file__))))\n"
            "from " + module + " import *\n";
        write_file_atomic(out_dir / "tests" / ("test_" + module + ".py"),
                          header + with_newline(*st.final_tests));
        files["tests"] = "tests/test_" + module + ".py";
      }
    }
    if (st.fortran_tests && st.status != UnitStatus::pending) {
      fs::create_directories(out_dir / "fortran_tests");
      write_file_atomic(out_dir / "fortran_tests" / (module + ".pf"), with_newline(*st.fortran_tests));
      files["fortran_tests"] = "fortran_tests/" + module + ".pf";
    }
    if (st.status == UnitStatus::passed) ++passed;
    if (st.status == UnitStatus::failed) ++failed;
    entries.push_back({{"unit", chunk},
                       {"members", st.members},
                       {"module", module},
                       {"status", to_string(st.status)},
                       {"reason", st.reason},
                       {"files", files},
                       {"attempts", st.attempts.size()},
                       {"provider_calls", st.provider_calls},
                       {"duration_seconds", duration},
                       {"last_error", st.last_error}});
  }
  json manifest = {{"session_id", s.session_id},
                   {"units", entries},
                   {"passed", passed},
                   {"failed", failed}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

// --- lock ------------------------------------------------------------------------

SessionLock::SessionLock(fs::path session_file) : path_(session_file.string() + ".lock") {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  for (int round = 0; round < 2; ++round) {
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY | O_CLOEXEC, 0644);
    if (fd >= 0) {
      std::string pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw IoError("cannot create lock " + path_.string());
    long owner = 0;
    try {
      owner = std::stol(trim(read_file(path_)));
    } catch (const std::exception&) {
      owner = 0;
    }
    bool alive = owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno == EPERM);
    if (alive) {
      throw SessionLocked("session is locked by process " + std::to_string(owner) + " (" +
                          path_.string() + ")");
    }
    std::error_code ec;
    fs::remove(path_, ec);
  }
  throw SessionLocked("could not acquire " + path_.string());
}

SessionLock::~SessionLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// --- orchestrator ----------------------------------------------------------------

Orchestrator::Orchestrator(TranslationSession& session, ChatClient& client, PromptLibrary prompts,
                           RunOptions options)
    : s_(session), client_(client), prompts_(std::move(prompts)), opt_(std::move(options)) {
  if (opt_.work_dir.empty()) {
    opt_.work_dir = fs::temp_directory_path() / ("ftrans-" + s_.session_id);
  }
  if (opt_.workers < 1) opt_.workers = 1;
}

void Orchestrator::persist() {
  int count;
  {
    std::lock_guard lock(mutex_);
    if (!opt_.session_file.empty()) save_session(s_, opt_.session_file);
    count = ++persist_count_;
  }
  if (opt_.on_persist) opt_.on_persist(count);
}

void Orchestrator::transition(const std::string& chunk, UnitStatus to, const std::string& reason) {
  {
    std::lock_guard lock(mutex_);
    set_status(s_, chunk, to, reason);
  }
  persist();
}

void Orchestrator::refresh_blocking() {
  std::lock_guard lock(mutex_);
  ftrans::refresh_blocking(s_);
}

std::vector<std::string> Orchestrator::dependency_modules(const std::string& chunk) const {
  std::vector<std::string> mods;
  const auto& own = s_.unit_states.at(chunk).members;
  for (const auto& d : chunk_dependencies(s_, chunk)) {
    for (const auto& m : s_.unit_states.at(d).members) {
      if (std::find(own.begin(), own.end(), m) == own.end()) mods.push_back(m);
    }
  }
  return mods;
}

// Every settled chunk this one reaches, as importable modules.
std::map<std::string, std::string> Orchestrator::fixtures_for(const std::string& chunk) const {
  std::map<std::string, std::string> fixtures;
  std::vector<std::string> stack = chunk_dependencies(s_, chunk);
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string c = stack.back();
    stack.pop_back();
    if (!seen.insert(c).second) continue;
    const auto& st = s_.unit_states.at(c);
    if (!settled(st.status) || !st.final_source) continue;
    fixtures[st.members.front()] = module_source(s_, c);
    for (std::size_t i = 1; i < st.members.size(); ++i) {
      fixtures[st.members[i]] = "from " + st.members.front() + " import *\n";
    }
    for (const auto& d : chunk_dependencies(s_, c)) stack.push_back(d);
  }
  return fixtures;
}

std::string Orchestrator::chunk_text(const std::string& chunk) const {
  return text_of(s_, s_.unit_states.at(chunk).members);
}

std::string Orchestrator::call(UnitState& work, Attempt& attempt, int& budget, PromptTask task,
                               const SlotMap& slots) {
  if (budget <= 0) throw ContractViolation("provider call budget for this attempt is spent");
  --budget;
  auto rendered = prompts_.render(task, slots);
  std::vector<ChatMessage> messages{{Role::system, rendered.system_text},
                                    {Role::user, rendered.user_text}};
  ++work.provider_calls;
  attempt.exchanges.push_back(request_digest(messages, client_.config().temperature));
  return client_.complete(messages).response_text;
}

UnitState Orchestrator::translate_unit(const std::string& chunk) {
  UnitState work;
  {
    std::lock_guard lock(mutex_);
    work = s_.unit_states.at(chunk);
  }
  if (settled(work.status) || work.status == UnitStatus::failed) return work;
  if (work.status == UnitStatus::blocked) return work;
  {
    std::lock_guard lock(mutex_);
    for (const auto& d : chunk_dependencies(s_, chunk)) {
      if (!settled(s_.unit_states.at(d).status)) {
        throw ContractViolation(chunk + " is not eligible: dependency " + d + " is " +
                                std::string(to_string(s_.unit_states.at(d).status)));
      }
    }
  }
  transition(chunk, UnitStatus::translating);

  auto commit = [&] {
    {
      std::lock_guard lock(mutex_);
      auto& st = s_.unit_states.at(chunk);
      UnitStatus status = st.status;
      std::string reason = st.reason;
      st = work;
      st.status = status;
      st.reason = reason;
    }
    persist();
  };

  const std::string module = work.members.front();
  const std::string text = chunk_text(chunk);
  std::map<std::string, std::string> fixtures;
  std::vector<std::string> deps;
  {
    std::lock_guard lock(mutex_);
    fixtures = fixtures_for(chunk);
    deps = dependency_modules(chunk);
  }
  const fs::path workdir = opt_.work_dir / module;

  while (true) {
    if (!work.attempts.empty() && work.attempts.back().report &&
        work.attempts.back().report->verdict == Verdict::all_passed) {
      work.final_source = work.attempts.back().candidate_source;
      work.final_tests = work.attempts.back().candidate_tests;
      work.last_error.clear();
      commit();
      transition(chunk, UnitStatus::passed);
      break;
    }
    if (static_cast<int>(work.attempts.size()) >= s_.max_iters) {
      commit();
      transition(chunk, UnitStatus::failed);
      break;
    }

    Attempt a;
    a.index = static_cast<int>(work.attempts.size()) + 1;
    int budget = a.index == 1 ? 3 : 2;
    auto start = std::chrono::steady_clock::now();
    const Attempt* prev = work.attempts.empty() ? nullptr : &work.attempts.back();
    try {
      if (prev && prev->report && !prev->candidate_source.empty() &&
          !prev->candidate_tests.empty()) {
        SlotMap slots{{"python_function", prev->candidate_source},
                      {"python_unit_tests", prev->candidate_tests},
                      {"python_test_results",
                       format_failure_context(*prev->report, s_.harness.failure_context_chars)}};
        auto parsed = parse_response(PromptTask::repair, call(work, a, budget, PromptTask::repair, slots));
        a.candidate_source = *parsed.source_code;
        a.candidate_tests = *parsed.unit_tests;
      } else {
        if (prev) {
          a.candidate_source = prev->candidate_source;
          a.candidate_tests = prev->candidate_tests;
        }
        if (!work.fortran_tests) {
          auto parsed = parse_response(
              PromptTask::gen_fortran_tests,
              call(work, a, budget, PromptTask::gen_fortran_tests, {{"fortran_code", text}}));
          work.fortran_tests = *parsed.unit_tests;
          work.fortran_tests_generated = true;
          commit();
        }
        if (a.candidate_tests.empty()) {
          auto parsed = parse_response(
              PromptTask::translate_tests,
              call(work, a, budget, PromptTask::translate_tests, {{"unit_tests", *work.fortran_tests}}));
          a.candidate_tests = *parsed.unit_tests;
        }
        if (a.candidate_source.empty()) {
          auto parsed = parse_response(
              PromptTask::translate_source,
              call(work, a, budget, PromptTask::translate_source, {{"python_code", text}}));
          a.candidate_source = *parsed.source_code;
        }
      }
      prepare_workdir(workdir, module, a.candidate_source, a.candidate_tests, fixtures, deps);
      auto run = TestRun::from_config(s_.harness, workdir);
      a.report = run_tests(run);
      if (a.report->verdict != Verdict::all_passed) {
        a.error = a.report->summary_line.empty() ? std::string(to_string(a.report->verdict))
                                                 : a.report->summary_line;
      }
    } catch (const Error& e) {
      a.error = e.what();
    }
    a.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    work.last_error = a.error;
    work.attempts.push_back(std::move(a));
    commit();
  }

  std::lock_guard lock(mutex_);
  return s_.unit_states.at(chunk);
}

void Orchestrator::run() {
  std::set<std::string> scope;
  if (!opt_.only_units.empty()) {
    std::vector<std::string> stack;
    for (const auto& u : opt_.only_units) stack.push_back(chunk_of(s_, u));
    while (!stack.empty()) {
      auto c = stack.back();
      stack.pop_back();
      if (!scope.insert(c).second) continue;
      for (const auto& d : chunk_dependencies(s_, c)) stack.push_back(d);
    }
  }
  refresh_blocking();
  persist();

  while (true) {
    std::vector<std::string> ready;
    {
      std::lock_guard lock(mutex_);
      for (const auto& chunk : s_.chunks) {
        if (!scope.empty() && !scope.count(chunk)) continue;
        if (s_.unit_states.at(chunk).status != UnitStatus::pending) continue;
        bool ok = true;
        for (const auto& d : chunk_dependencies(s_, chunk)) {
          ok = ok && settled(s_.unit_states.at(d).status);
        }
        if (ok) ready.push_back(chunk);
        if (static_cast<int>(ready.size()) >= opt_.workers) break;
      }
    }
    if (ready.empty()) break;

    if (ready.size() == 1) {
      translate_unit(ready.front());
    } else {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(ready.size());
      for (std::size_t i = 0; i < ready.size(); ++i) {
        threads.emplace_back([&, i] {
          try {
            translate_unit(ready[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    refresh_blocking();
    persist();
  }
}

}  // namespace ftrans
