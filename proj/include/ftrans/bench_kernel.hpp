#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftrans/leaf_numerics.hpp"

namespace ftrans::leaf {

struct BatchResult {
  std::vector<double> ci;  // NaN where the solve failed
  std::vector<double> an;
  std::vector<int> iterations;
};

// n evenly spaced values over [lo, hi]; n == 1 gives {lo}.
std::vector<double> linspace(double lo, double hi, std::size_t n);

// Serial reference kernel.
BatchResult solve_batch_serial(const PhotoParams& p, const std::vector<double>& ci0);
// OpenMP kernel; workers <= 0 uses the OpenMP default. Bitwise identical to
// the serial reference.
BatchResult solve_batch_parallel(const PhotoParams& p, const std::vector<double>& ci0,
                                 int workers = 0);

// FNV-1a over the bit patterns of ci, an and iterations.
std::uint64_t results_fingerprint(const BatchResult& r);

struct BenchReport {
  std::size_t n = 0;
  double ci_lo = 35.0;
  double ci_hi = 70.0;
  int workers = 1;
  double wall_seconds = 0.0;
  double solves_per_second = 0.0;
  std::size_t converged = 0;
  std::size_t failed = 0;
  double mean_iterations = 0.0;
  int max_iterations = 0;
  double ci_min = 0.0;
  double ci_max = 0.0;
  std::string fingerprint;  // hex results_fingerprint
};

nlohmann::json to_json(const BenchReport& r);

// Solves from n evenly spaced ci0 over [lo, hi]. workers == 1 runs the
// serial reference. Throws ContractViolation for n < 1.
BenchReport bench_kernel(std::size_t n, const PhotoParams& p = {}, double lo = 35.0,
                         double hi = 70.0, int workers = 1);

}  // namespace ftrans::leaf
