#include "ftrans/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "ftrans/error.hpp"
#include "ftrans/leaf_numerics.hpp"
#include "ftrans/test_harness.hpp"
#include "ftrans/util.hpp"

namespace ftrans {

namespace fs = std::filesystem;

std::map<std::string, std::string> compute_checksums(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), root).generic_string();
    if (rel == "checksums.json") continue;
    if (rel.find("__pycache__") != std::string::npos) continue;
    out[rel] = sha256_hex(read_file(e.path()));
  }
  return out;
}

std::vector<CorpusEntry> load_corpus(const fs::path& root) {
  auto manifest_path = root / "checksums.json";
  if (!fs::exists(manifest_path)) throw IoError("missing corpus manifest " + manifest_path.string());
  auto manifest = nlohmann::json::parse(read_file(manifest_path));
  auto expected = manifest.at("files").get<std::map<std::string, std::string>>();
  auto actual = compute_checksums(root);
  for (const auto& [path, sum] : expected) {
    auto it = actual.find(path);
    if (it == actual.end() || it->second != sum) throw ChecksumMismatch(path);
  }
  for (const auto& [path, sum] : actual) {
    if (!expected.count(path)) throw ChecksumMismatch(path + " (not listed)");
  }

  std::vector<CorpusEntry> entries;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    CorpusEntry c;
    c.name = d.filename().string();
    c.dir = d;
    c.fortran_source = d / "src.f90";
    c.fortran_tests = d / "tests.pf";
    if (fs::is_directory(d / "golden")) {
      for (const auto& g : fs::directory_iterator(d / "golden")) {
        if (g.path().extension() != ".py") continue;
        auto stem = g.path().stem().string();
        if (stem.rfind("test_", 0) == 0) c.golden_tests[stem.substr(5)] = g.path();
        else c.golden_sources[stem] = g.path();
      }
    }
    if (fs::exists(d / "oracle.json")) {
      auto j = nlohmann::json::parse(read_file(d / "oracle.json"));
      if (j.contains("signatures")) {
        c.signatures = j.at("signatures").get<std::map<std::string, std::vector<std::string>>>();
      }
      for (const auto& k : j.at("cases")) {
        OracleCase oc;
        oc.unit = k.at("unit");
        oc.args = k.at("args").get<std::vector<double>>();
        if (!k.at("expected").is_null()) oc.expected = k.at("expected").get<double>();
        oc.tol = k.at("tol");
        oc.source = k.value("source", "oracle");
        c.oracle.push_back(std::move(oc));
      }
    }
    entries.push_back(std::move(c));
  }
  return entries;
}

std::vector<CorpusEntry> load_corpus() { return load_corpus(resource_dir() / "corpus"); }

const CorpusEntry* find_entry(const std::vector<CorpusEntry>& entries, const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

using leaf::PhotoParams;

PhotoParams biochem(const std::vector<double>& a, std::size_t from) {
  PhotoParams p;
  p.vcmax25 = a[from];
  p.jmax25 = a[from + 1];
  p.rd25 = a[from + 2];
  p.gamma_star = a[from + 3];
  p.kc = a[from + 4];
  p.ko = a[from + 5];
  p.oi = a[from + 6];
  return p;
}

PhotoParams full(const std::vector<double>& a, std::size_t from) {
  PhotoParams p = biochem(a, from);
  p.ca = a[from + 7];
  p.g0 = a[from + 8];
  p.g1 = a[from + 9];
  p.vpd = a[from + 10];
  p.pressure = a[from + 11];
  return p;
}

struct Reference {
  std::size_t arity;
  std::function<double(const std::vector<double>&)> fn;
};

const std::map<std::string, Reference>& references() {
  static const std::map<std::string, Reference> refs{
      {"daylength", {2, [](const auto& a) { return leaf::daylength(a[0], a[1]); }}},
      {"net_assimilation",
       {8, [](const auto& a) { return leaf::assimilation(a[0], biochem(a, 1)); }}},
      {"ci_residual", {13, [](const auto& a) { return leaf::ci_residual(a[0], full(a, 1)); }}},
      {"solve_ci",
       {13,
        [](const auto& a) {
          // the translated loop returns its last iterate even without
          // convergence, so compare against the same
          return leaf::detail::secant_bisection(full(a, 1), a[0], -1, nullptr, nullptr);
        }}},
      {"rubisco_rate",
       {6,
        [](const auto& a) {
          PhotoParams p;
          p.vcmax25 = a[1];
          p.gamma_star = a[2];
          p.kc = a[3];
          p.ko = a[4];
          p.oi = a[5];
          return leaf::rubisco_rate(a[0], p);
        }}},
      {"electron_rate",
       {3,
        [](const auto& a) {
          PhotoParams p;
          p.jmax25 = a[1];
          p.gamma_star = a[2];
          return leaf::electron_rate(a[0], p);
        }}},
      {"colimit", {3, [](const auto& a) { return std::min(a[0], a[1]) - a[2]; }}},
      {"medlyn_gs",
       {6,
        [](const auto& a) {
          PhotoParams p;
          p.ca = a[1];
          p.g0 = a[2];
          p.g1 = a[3];
          p.vpd = a[4];
          p.pressure = a[5];
          return leaf::stomatal_conductance(a[0], p);
        }}},
      {"co2_diffusion",
       {4,
        [](const auto& a) {
          PhotoParams p;
          p.ca = a[1];
          p.pressure = a[3];
          return leaf::co2_supply(a[0], a[2], p);
        }}},
      {"ci_func", {13, [](const auto& a) { return leaf::ci_residual(a[0], full(a, 1)); }}},
      {"secant_step",
       {4,
        [](const auto& a) {
          return a[3] != a[1] ? a[2] - a[3] * (a[2] - a[0]) / (a[3] - a[1]) : -1.0;
        }}},
      {"bisect_step", {2, [](const auto& a) { return 0.5 * (a[0] + a[1]); }}},
      {"hybrid",
       {13,
        [](const auto& a) {
          PhotoParams p = full(a, 1);
          double ci = leaf::detail::secant_bisection(p, a[0], -1, nullptr, nullptr);
          double an = leaf::assimilation(ci, p);
          double supply = leaf::co2_supply(leaf::stomatal_conductance(an, p), ci, p);
          return std::abs(supply - an) > 1e-3 ? -1.0 : ci;
        }}},
  };
  return refs;
}

}  // namespace

bool has_reference(const std::string& unit) { return references().count(unit) > 0; }

double reference_value(const std::string& unit, const std::vector<double>& args) {
  auto it = references().find(unit);
  if (it == references().end()) throw UnknownUnit(unit);
  if (args.size() != it->second.arity) {
    throw ContractViolation(unit + " takes " + std::to_string(it->second.arity) + " arguments");
  }
  return it->second.fn(args);
}

std::vector<OracleMismatch> verify_translations(const fs::path& dir,
                                                const std::vector<CorpusEntry>& corpus,
                                                std::vector<std::string>* checked,
                                                const std::string& python) {
  std::vector<const OracleCase*> cases;
  std::set<std::string> units;
  for (const auto& e : corpus) {
    for (const auto& c : e.oracle) {
      if (fs::exists(dir / (c.unit + ".py")) && has_reference(c.unit)) {
        cases.push_back(&c);
        units.insert(c.unit);
      }
    }
  }
  if (checked) checked->assign(units.begin(), units.end());
  if (cases.empty()) return {};

  nlohmann::json payload = nlohmann::json::array();
  for (const auto* c : cases) payload.push_back({c->unit, c->args});
  std::string driver =
      "import importlib, json, math, sys\n"
      "sys.dont_write_bytecode = True\n"
      "import numpy as np\n"
      "sys.path.insert(0, " + nlohmann::json(fs::absolute(dir).string()).dump() + ")\n"
      "cases = json.loads(" + nlohmann::json(payload.dump()).dump() + ")\n"
      "out = []\n"
      "for unit, args in cases:\n"
      "    try:\n"
      "        fn = getattr(importlib.import_module(unit), unit)\n"
      "        v = float(np.asarray(fn(*args), dtype=float).reshape(-1)[0])\n"
      "        out.append({'v': None if math.isnan(v) else v, 'nan': math.isnan(v), 'err': ''})\n"
      "    except Exception as exc:\n"
      "        out.append({'v': None, 'nan': False, 'err': repr(exc)[:300]})\n"
      "print('RESULTS ' + json.dumps(out))\n";

  fs::path work = fs::temp_directory_path() /
                  ("ftrans-verify-" + sha256_hex(fs::absolute(dir).string() + driver).substr(0, 16));
  fs::create_directories(work);
  write_file_atomic(work / "driver.py", driver);
  TestRun run;
  run.workdir = work;
  run.command = {python, "driver.py"};
  run.timeout_seconds = 120;
  run.env_allowlist = HarnessConfig{}.env_allowlist;
  TestReport report = run_tests(run);
  std::error_code ec;
  fs::remove_all(work, ec);

  nlohmann::json results;
  for (const auto& line : split_lines(report.stdout_tail)) {
    if (line.rfind("RESULTS ", 0) == 0) results = nlohmann::json::parse(line.substr(8));
  }
  if (!results.is_array() || results.size() != cases.size()) {
    throw Error("oracle driver failed (exit " + std::to_string(report.exit_code) +
                "): " + tail_lines(report.stderr_tail, 20));
  }

  std::vector<OracleMismatch> mismatches;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = *cases[i];
    const auto& r = results[i];
    double expected = reference_value(c.unit, c.args);
    std::string err = r.at("err");
    double actual = r.at("nan").get<bool>() ? nan : (r.at("v").is_null() ? nan : r.at("v").get<double>());
    bool ok;
    if (!err.empty()) ok = false;
    else if (std::isnan(expected)) ok = std::isnan(actual);
    else ok = !std::isnan(actual) && std::abs(actual - expected) <= c.tol;
    if (!ok) mismatches.push_back({c.unit, c.args, expected, actual, err});
  }
  return mismatches;
}

}  // namespace ftrans
