#include "ftrans/bench_kernel.hpp"

#include <omp.h>

#include <chrono>
#include <cstring>
#include <limits>

namespace ftrans::leaf {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = n == 1 ? lo : (k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) /
                                                        static_cast<double>(n - 1));
  }
  return out;
}

namespace {

void solve_one(const PhotoParams& p, double ci0, BatchResult& r, std::size_t k) {
  try {
    SolveResult s = solve_ci(p, ci0);
    r.ci[k] = s.ci;
    r.an[k] = s.an;
    r.iterations[k] = s.iterations;
  } catch (const Error&) {
    r.ci[k] = r.an[k] = std::numeric_limits<double>::quiet_NaN();
    r.iterations[k] = -1;
  }
}

BatchResult sized(std::size_t n) {
  BatchResult r;
  r.ci.resize(n);
  r.an.resize(n);
  r.iterations.resize(n);
  return r;
}

}  // namespace

BatchResult solve_batch_serial(const PhotoParams& p, const std::vector<double>& ci0) {
  BatchResult r = sized(ci0.size());
  for (std::size_t k = 0; k < ci0.size(); ++k) solve_one(p, ci0[k], r, k);
  return r;
}

BatchResult solve_batch_parallel(const PhotoParams& p, const std::vector<double>& ci0,
                                 int workers) {
  BatchResult r = sized(ci0.size());
  const auto n = static_cast<std::ptrdiff_t>(ci0.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    solve_one(p, ci0[static_cast<std::size_t>(k)], r, static_cast<std::size_t>(k));
  }
  return r;
}

std::uint64_t results_fingerprint(const BatchResult& r) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (std::size_t k = 0; k < r.ci.size(); ++k) {
    mix(&r.ci[k], sizeof(double));
    mix(&r.an[k], sizeof(double));
    mix(&r.iterations[k], sizeof(int));
  }
  return h;
}

nlohmann::json to_json(const BenchReport& r) {
  return {{"n", r.n},
          {"ci_range_pa", {r.ci_lo, r.ci_hi}},
          {"workers", r.workers},
          {"wall_seconds", r.wall_seconds},
          {"solves_per_second", r.solves_per_second},
          {"converged", r.converged},
          {"failed", r.failed},
          {"mean_iterations", r.mean_iterations},
          {"max_iterations", r.max_iterations},
          {"ci_star_min", r.ci_min},
          {"ci_star_max", r.ci_max},
          {"results_fingerprint", r.fingerprint}};
}

BenchReport bench_kernel(std::size_t n, const PhotoParams& p, double lo, double hi,
                         int workers) {
  if (n < 1) throw ContractViolation("bench needs n >= 1");
  validate(p);
  auto inputs = linspace(lo, hi, n);
  auto start = std::chrono::steady_clock::now();
  BatchResult r = workers == 1 ? solve_batch_serial(p, inputs)
                               : solve_batch_parallel(p, inputs, workers);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  BenchReport rep;
  rep.n = n;
  rep.ci_lo = lo;
  rep.ci_hi = hi;
  rep.workers = workers > 0 ? workers : omp_get_max_threads();
  rep.wall_seconds = wall;
  rep.solves_per_second = wall > 0 ? static_cast<double>(n) / wall : 0.0;
  long total_iter = 0;
  rep.ci_min = std::numeric_limits<double>::infinity();
  rep.ci_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (r.iterations[k] < 0) {
      ++rep.failed;
      continue;
    }
    ++rep.converged;
    total_iter += r.iterations[k];
    rep.max_iterations = std::max(rep.max_iterations, r.iterations[k]);
    rep.ci_min = std::min(rep.ci_min, r.ci[k]);
    rep.ci_max = std::max(rep.ci_max, r.ci[k]);
  }
  rep.mean_iterations = rep.converged ? static_cast<double>(total_iter) / rep.converged : 0.0;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(results_fingerprint(r)));
  rep.fingerprint = hex;
  return rep;
}

}  // namespace ftrans::leaf
