// ftrans: command-line entry point.
//
// Exit codes: 0 success, 1 pipeline failure, 2 usage or input error.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ftrans/bench_kernel.hpp"
#include "ftrans/config.hpp"
#include "ftrans/corpus.hpp"
#include "ftrans/dep_graph.hpp"
#include "ftrans/error.hpp"
#include "ftrans/fortran_units.hpp"
#include "ftrans/leaf_numerics.hpp"
#include "ftrans/orchestrator.hpp"
#include "ftrans/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ftrans;

namespace {

constexpr int kOk = 0;
constexpr int kPipelineFailure = 1;
constexpr int kUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

template <typename... Ts>
bool any_of_types(const Error& e) {
  return (... || (dynamic_cast<const Ts*>(&e) != nullptr));
}

// Errors caused by what the user passed in rather than by the pipeline.
bool is_input_error(const Error& e) {
  return any_of_types<UsageError, IoError, ConfigError, EmptyCodebase, UnbalancedBlock, NonUtf8Source,
                      FixedFormSource, DuplicateUnitName, UnknownUnit, SchemaMismatch,
                      CorruptSession, SessionLocked, ChecksumMismatch, EmptyObservations,
                      ContractViolation>(e);
}

// --json [PATH]: "-" (or no value) is stdout. Human-readable text goes to
// stderr whenever JSON occupies stdout.
struct Output {
  CLI::Option* opt = nullptr;
  std::string path;

  bool json_requested() const { return opt && opt->count() > 0; }
  bool json_on_stdout() const { return json_requested() && (path.empty() || path == "-"); }
  std::ostream& human() const { return json_on_stdout() ? std::cerr : std::cout; }

  void emit(const json& j) const {
    if (!json_requested()) return;
    if (json_on_stdout()) {
      std::cout << j.dump(2) << "\n";
    } else {
      write_file_atomic(path, j.dump(2) + "\n");
    }
  }
};

Output add_json(CLI::App* cmd, Output& out) {
  out.opt = cmd->add_option("--json", out.path, "Write machine-readable output (PATH or - for stdout)")
                ->expected(0, 1);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else write_file_atomic(path, text);
}

std::vector<fortran::SourceUnit> scan_root(const std::string& root) {
  if (!fs::is_directory(root)) throw UsageError("not a directory: " + root);
  return fortran::scan_tree(root);
}

int cmd_analyze(const std::string& root, bool inline_text, const Output& out) {
  auto units = scan_root(root);
  if (units.empty()) throw EmptyCodebase(root);
  out.emit(fortran::units_manifest(units, inline_text));
  for (const auto& u : units) {
    auto& h = out.human();
    h << u.id << "  " << fortran::to_string(u.kind) << "  lines " << u.lines.start << "-"
      << u.lines.end << "  ~" << fortran::estimate_tokens(u).approx_tokens << " tokens";
    if (!u.references.empty()) {
      h << "  ->";
      for (const auto& r : u.references) h << " " << r;
    }
    h << "\n";
  }
  return kOk;
}

int cmd_graph(const std::string& root, const std::string& dot_path, const Output& out) {
  auto g = build_graph(scan_root(root));
  std::string dot = to_dot(g);
  out.emit(graph_json(g));
  if (!dot_path.empty()) {
    write_text(dot_path, dot);
  } else if (!out.json_on_stdout()) {
    std::cout << dot;
  }
  return kOk;
}

int cmd_order(const std::string& root, const Output& out) {
  auto order = order_for_translation(build_graph(scan_root(root)));
  out.emit(json{{"groups", order.groups}});
  out.human() << format_order(order);
  return kOk;
}

struct TranslateArgs {
  std::string root;
  std::vector<std::string> units;
  std::string provider;
  std::string out = "out";
  std::optional<int> max_iters;
  std::optional<int> token_budget;
  std::optional<int> workers;
  std::string resume;
  std::string session;
  std::vector<std::string> waive;
  std::string transcripts;
  std::string base_url;
  std::string model;
  std::vector<std::string> inject_defect;
  std::string config;
};

int cmd_translate(const TranslateArgs& a, const Output& out) {
  json flags = json::object();
  if (!a.provider.empty()) flags["provider"]["kind"] = a.provider;
  if (!a.transcripts.empty()) flags["provider"]["transcript_dir"] = a.transcripts;
  if (!a.base_url.empty()) flags["provider"]["base_url"] = a.base_url;
  if (!a.model.empty()) flags["provider"]["model_name"] = a.model;
  if (!a.inject_defect.empty()) flags["provider"]["inject_defect_units"] = a.inject_defect;
  if (a.max_iters) flags["max_iters"] = *a.max_iters;
  if (a.token_budget) flags["token_budget"] = *a.token_budget;
  if (a.workers) flags["workers"] = *a.workers;
  std::optional<fs::path> config_path;
  if (!a.config.empty()) config_path = a.config;
  CliConfig cfg = resolve_config(config_path, flags, current_env());

  if (a.resume.empty() && a.root.empty()) throw UsageError("translate needs a ROOT or --resume FILE");
  fs::path session_file = !a.resume.empty() ? fs::path(a.resume)
                          : !a.session.empty() ? fs::path(a.session)
                                               : fs::path(a.out) / "session.json";
  SessionLock lock(session_file);

  TranslationSession session;
  if (!a.resume.empty()) {
    session = resume(session_file);
    session.max_iters = cfg.max_iters;
  } else {
    SessionSettings settings;
    settings.token_budget = cfg.token_budget;
    settings.max_iters = cfg.max_iters;
    settings.harness = cfg.harness;
    settings.snapshot = to_json(cfg);
    settings.snapshot.erase("origin");
    session = plan_session(a.root, settings);
  }
  for (const auto& u : a.units) chunk_of(session, u);  // UnknownUnit -> exit 2
  for (const auto& u : a.waive) waive(session, u);
  save_session(session, session_file);

  ChatClient client(cfg.provider);
  RunOptions opts;
  opts.session_file = session_file;
  opts.work_dir = fs::path(a.out) / ".work";
  opts.workers = cfg.workers;
  opts.only_units.insert(a.units.begin(), a.units.end());
  Orchestrator orch(session, client, PromptLibrary::bundled(), opts);
  orch.run();
  auto manifest = emit_outputs(session, a.out);
  {
    std::error_code ec;
    fs::remove_all(opts.work_dir, ec);
  }

  std::set<std::string> scope;
  if (a.units.empty()) {
    scope.insert(session.chunks.begin(), session.chunks.end());
  } else {
    for (const auto& u : a.units) scope.insert(chunk_of(session, u));
  }
  bool ok = true;
  auto& h = out.human();
  for (const auto& chunk : session.chunks) {
    const auto& st = session.unit_states.at(chunk);
    bool in_scope = scope.count(chunk) > 0;
    if (in_scope && st.status != UnitStatus::passed && st.status != UnitStatus::waived) ok = false;
    h << chunk << ": " << to_string(st.status);
    if (!st.reason.empty()) h << " (" << st.reason << ")";
    if (!st.attempts.empty()) h << ", " << st.attempts.size() << " attempt(s)";
    h << ", " << st.provider_calls << " provider call(s)";
    if (st.status == UnitStatus::failed && !st.last_error.empty()) h << ": " << st.last_error;
    h << "\n";
  }
  manifest["session_file"] = session_file.string();
  manifest["provider_calls"] = client.calls();
  out.emit(manifest);
  if (!ok) h << "translation incomplete; see " << (fs::path(a.out) / "manifest.json").string() << "\n";
  return ok ? kOk : kPipelineFailure;
}

struct FitArgs {
  std::string data;
  std::string method = "gd";
  int steps = 10;
  double lr = 2.0;
  int n = 50;
  double lo = 10.0;
  double hi = 100.0;
  double vcmax0 = 60.0;
};

int cmd_fit(const FitArgs& a, const Output& out) {
  fs::path data = a.data.empty() ? resource_dir() / "data" / "synthetic_observations.csv" : fs::path(a.data);
  if (!fs::exists(data)) throw UsageError("observation file not found: " + data.string());
  auto obs = leaf::read_observations(data);
  leaf::PhotoParams p;
  leaf::FitResult r;
  if (a.method == "gd") {
    r = leaf::fit_gradient_descent(p, obs, a.vcmax0, a.steps, a.lr);
  } else if (a.method == "grid") {
    r = leaf::fit_uniform(p, obs, a.lo, a.hi, a.n);
  } else {
    throw UsageError("--method must be grid or gd");
  }
  json j = leaf::to_json(r);
  j["data"] = data.string();
  j["observations"] = obs.size();
  out.emit(j);
  char line[160];
  std::snprintf(line, sizeof line, "%s: vcmax_hat=%.4f loss=%.6f iterations=%d\n",
                std::string(leaf::to_string(r.method)).c_str(), r.vcmax_hat, r.loss, r.iterations);
  out.human() << line;
  return kOk;
}

int cmd_bench(long n, int workers, const std::string& out_path, const Output& out) {
  if (n < 1) throw UsageError("--n must be at least 1");
  auto r = leaf::bench_kernel(static_cast<std::size_t>(n), {}, 35.0, 70.0, workers);
  json j = leaf::to_json(r);
  if (!out_path.empty()) write_file_atomic(out_path, j.dump(2) + "\n");
  if (out.json_requested()) {
    out.emit(j);
  } else if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  }
  char line[200];
  std::snprintf(line, sizeof line, "%zu solves in %.3f s (%.0f solves/s), %zu failed\n", r.n,
                r.wall_seconds, r.solves_per_second, r.failed);
  std::cerr << line;
  return r.failed == 0 ? kOk : kPipelineFailure;
}

int cmd_verify(const std::string& dir, const Output& out) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  auto corpus = load_corpus();
  std::vector<std::string> checked;
  auto mismatches = verify_translations(dir, corpus, &checked);
  if (checked.empty()) throw UsageError("no translated corpus units found in " + dir);
  json j = {{"checked", checked}, {"mismatches", json::array()}};
  std::set<std::string> bad;
  for (const auto& m : mismatches) {
    bad.insert(m.unit);
    j["mismatches"].push_back({{"unit", m.unit},
                               {"args", m.args},
                               {"expected", std::isnan(m.expected) ? json(nullptr) : json(m.expected)},
                               {"actual", std::isnan(m.actual) ? json(nullptr) : json(m.actual)},
                               {"error", m.error}});
  }
  out.emit(j);
  auto& h = out.human();
  h << std::setprecision(12);
  for (const auto& u : checked) h << (bad.count(u) ? "MISMATCH " : "ok       ") << u << "\n";
  for (const auto& m : mismatches) {
    h << "  " << m.unit << "(";
    for (std::size_t i = 0; i < m.args.size(); ++i) h << (i ? ", " : "") << m.args[i];
    h << "): expected " << m.expected << ", got " << m.actual;
    if (!m.error.empty()) h << " [" << m.error << "]";
    h << "\n";
  }
  return mismatches.empty() ? kOk : kPipelineFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fortran to Python migration driver and leaf photosynthesis numerics", "ftrans"};
  app.require_subcommand(1);
  int code = kOk;

  std::string root;
  bool inline_text = false;
  Output analyze_out;
  auto* analyze = app.add_subcommand("analyze", "Scan a Fortran tree and list its units");
  analyze->add_option("root", root, "Codebase root")->required();
  analyze->add_flag("--inline-text", inline_text, "Include unit text in the manifest");
  add_json(analyze, analyze_out);

  std::string dot_path;
  Output graph_out;
  auto* graph = app.add_subcommand("graph", "Emit the unit dependency graph as DOT");
  graph->add_option("root", root, "Codebase root")->required();
  graph->add_option("--dot", dot_path, "DOT output file (default stdout)");
  add_json(graph, graph_out);

  Output order_out;
  auto* order = app.add_subcommand("order", "Print the translation order, one group per line");
  order->add_option("root", root, "Codebase root")->required();
  add_json(order, order_out);

  TranslateArgs ta;
  Output translate_out;
  auto* translate = app.add_subcommand("translate", "Run or resume a translation session");
  translate->add_option("root", ta.root, "Codebase root");
  translate->add_option("--unit", ta.units, "Translate only these units (and their dependencies)");
  translate->add_option("--provider", ta.provider, "http_chat, replay or rule_based");
  translate->add_option("--out", ta.out, "Output directory")->capture_default_str();
  translate->add_option("--max-iters", ta.max_iters, "Attempts per unit");
  translate->add_option("--token-budget", ta.token_budget, "Largest unit, in estimated tokens");
  translate->add_option("--workers", ta.workers, "Parallel unit translations");
  translate->add_option("--resume", ta.resume, "Resume this session file");
  translate->add_option("--session", ta.session, "Session file (default OUT/session.json)");
  translate->add_option("--waive", ta.waive, "Accept a failed unit's last candidate");
  translate->add_option("--transcripts", ta.transcripts, "Transcript directory (replay source or recording target)");
  translate->add_option("--base-url", ta.base_url, "http_chat endpoint base URL");
  translate->add_option("--model", ta.model, "http_chat model name");
  translate->add_option("--inject-defect", ta.inject_defect,
                        "rule_based: plant a defect in the first translation of these units");
  translate->add_option("--config", ta.config, "JSON config file (FTRANS_CONFIG wins)");
  add_json(translate, translate_out);

  FitArgs fa;
  Output fit_out;
  auto* fit = app.add_subcommand("fit", "Estimate vcmax from leaf observations");
  fit->add_option("--data", fa.data, "CSV with header ci_pa,an_umol_m2_s (default: bundled synthetic set)");
  fit->add_option("--method", fa.method, "grid or gd")->capture_default_str();
  fit->add_option("--steps", fa.steps, "Gradient-descent steps")->capture_default_str();
  fit->add_option("--lr", fa.lr, "Gradient-descent learning rate")->capture_default_str();
  fit->add_option("--vcmax0", fa.vcmax0, "Gradient-descent start")->capture_default_str();
  fit->add_option("--n", fa.n, "Grid points")->capture_default_str();
  fit->add_option("--lo", fa.lo, "Grid lower bound")->capture_default_str();
  fit->add_option("--hi", fa.hi, "Grid upper bound")->capture_default_str();
  add_json(fit, fit_out);

  long bench_n = 10000;
  int bench_workers = 1;
  std::string bench_path;
  Output bench_out;
  auto* bench = app.add_subcommand("bench", "Time the ci solver over ci0 in [35, 70] Pa");
  bench->add_option("--n", bench_n, "Number of solves")->capture_default_str();
  bench->add_option("--workers", bench_workers, "OpenMP threads (1 = serial reference)")
      ->capture_default_str();
  bench->add_option("--out", bench_path, "Write the JSON report here");
  add_json(bench, bench_out);

  std::string verify_dir;
  Output verify_out;
  auto* verify = app.add_subcommand("verify", "Compare translated corpus units with the native reference");
  verify->add_option("--out", verify_dir, "Directory holding <unit>.py files")->required();
  add_json(verify, verify_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*analyze) code = cmd_analyze(root, inline_text, analyze_out);
    else if (*graph) code = cmd_graph(root, dot_path, graph_out);
    else if (*order) code = cmd_order(root, order_out);
    else if (*translate) code = cmd_translate(ta, translate_out);
    else if (*fit) code = cmd_fit(fa, fit_out);
    else if (*bench) code = cmd_bench(bench_n, bench_workers, bench_path, bench_out);
    else if (*verify) code = cmd_verify(verify_dir, verify_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e) ? kUsage : kPipelineFailure;
  }
  return code;
}
