#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftrans/dual.hpp"
#include "ftrans/error.hpp"

namespace ftrans::leaf {

// --- day length ----------------------------------------------------------------

// Seconds between sunrise and sunset; NaN for |lat| >= pi/2 + 10 eps or
// |decl| >= pi/2.
double daylength(double lat, double decl);
std::vector<double> daylength(const std::vector<double>& lat, double decl);

// --- leaf photosynthesis ------------------------------------------------------------

// Single 25 degC operating point. Partial pressures in Pa, rates in
// umol CO2 m-2 s-1, conductance in mol m-2 s-1, vpd in kPa.
template <typename T>
struct PhotoParamsT {
  T vcmax25 = 62.5;
  T jmax25 = 104.375;  // 1.67 * default vcmax25
  T rd25 = 0.9375;     // 0.015 * default vcmax25
  T gamma_star = 4.275;
  T kc = 40.49;
  T ko = 27840.0;
  T oi = 20900.0;
  T ca = 40.0;
  T g0 = 0.01;
  T g1 = 4.0;
  T vpd = 1.5;
  T pressure = 101325.0;
};
using PhotoParams = PhotoParamsT<double>;

enum class Param { vcmax25, jmax25, rd25, gamma_star, kc, ko, oi, ca, g0, g1, vpd, pressure };

// Lifts params to duals with `active` as the differentiation variable.
PhotoParamsT<Dual> seed(const PhotoParams& p, Param active = Param::vcmax25);
double& field(PhotoParams& p, Param which);

// Throws ContractViolation unless every field is strictly positive.
void validate(const PhotoParams& p);

template <typename T>
T rubisco_rate(const T& ci, const PhotoParamsT<T>& p) {
  return p.vcmax25 * (ci - p.gamma_star) / (ci + p.kc * (1.0 + p.oi / p.ko));
}

template <typename T>
T electron_rate(const T& ci, const PhotoParamsT<T>& p) {
  return (p.jmax25 / 4.0) * (ci - p.gamma_star) / (ci + 2.0 * p.gamma_star);
}

// Net assimilation An = min(Ac, Aj) - rd25. Throws NonPositiveCi.
template <typename T>
T assimilation(const T& ci, const PhotoParamsT<T>& p) {
  using std::min;
  if (!(value_of(ci) > 0.0)) throw NonPositiveCi(value_of(ci));
  return min(rubisco_rate(ci, p), electron_rate(ci, p)) - p.rd25;
}

// Medlyn conductance to water vapour. Negative assimilation gives g0 (no
// negative opening); ca is converted from Pa to umol/mol via pressure.
template <typename T>
T stomatal_conductance(const T& an, const PhotoParamsT<T>& p) {
  using std::max;
  using std::sqrt;
  return p.g0 + 1.6 * (1.0 + p.g1 / sqrt(p.vpd)) * max(an, T(0.0)) * p.pressure * 1e-6 / p.ca;
}

// CO2 supply through the stomata at conductance gs.
template <typename T>
T co2_supply(const T& gs, const T& ci, const PhotoParamsT<T>& p) {
  return gs * (p.ca - ci) / (1.6 * p.pressure) * 1e6;
}

// f(ci) = An(ci) - supply(gs(An(ci)), ci); its root is the coupled ci.
template <typename T>
T ci_residual(const T& ci, const PhotoParamsT<T>& p) {
  T an = assimilation(ci, p);
  return an - co2_supply(stomatal_conductance(an, p), ci, p);
}

struct SolveResult {
  double ci = 0.0;
  double an = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

inline constexpr int kMaxSolveIterations = 40;
inline constexpr double kResidualTol = 1e-6;
inline constexpr double kStepTol = 1e-3;

namespace detail {

// One shared implementation: `fixed_iterations` < 0 iterates to the
// tolerances, otherwise exactly that many updates are applied.
template <typename T>
T secant_bisection(const PhotoParamsT<T>& p, double ci0, int fixed_iterations, int* used,
                   double* residual) {
  T lo = 1e-6;
  T hi = 2.0 * p.ca;
  T x0 = ci0;
  T f0 = ci_residual(x0, p);
  if (f0 < 0.0) lo = x0; else hi = x0;
  T x1 = 0.99 * x0;
  T f1 = ci_residual(x1, p);
  if (f1 < 0.0) lo = std::max(lo, x1); else hi = std::min(hi, x1);

  const int limit = fixed_iterations < 0 ? kMaxSolveIterations : fixed_iterations;
  int iter = 0;
  for (; iter < limit; ++iter) {
    if (fixed_iterations < 0 && std::abs(value_of(f1)) <= kResidualTol &&
        std::abs(value_of(x1) - value_of(x0)) <= kStepTol) {
      break;
    }
    T x2 = f1 != f0 ? x1 - f1 * (x1 - x0) / (f1 - f0) : lo;
    if (x2 <= lo || x2 >= hi) x2 = 0.5 * (lo + hi);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = ci_residual(x1, p);
    if (f1 < 0.0) lo = x1; else hi = x1;
  }
  if (fixed_iterations < 0 && !(std::abs(value_of(f1)) <= kResidualTol &&
                                std::abs(value_of(x1) - value_of(x0)) <= kStepTol)) {
    iter = limit + 1;  // signals non-convergence
  }
  if (used) *used = iter;
  if (residual) *residual = value_of(f1);
  return x1;
}

}  // namespace detail

// Safeguarded secant from ci0 with bisection fallback on the bracket
// (1e-6, 2 ca); stops when |f| <= 1e-6 and the last step <= 1e-3 Pa.
// Throws NonPositiveCi, ContractViolation (ci0 >= 2 ca) or NoConvergence.
SolveResult solve_ci(const PhotoParams& p, double ci0);

// The solver with exactly `iterations` updates, for differentiation through
// the loop (use the count solve_ci reports).
template <typename T>
T solve_ci_unrolled(const PhotoParamsT<T>& p, double ci0, int iterations) {
  return detail::secant_bisection(p, ci0, iterations, nullptr, nullptr);
}

// --- parameter estimation -----------------------------------------------------------

struct LeafObservation {
  double ci = 0.0;  // Pa
  double an = 0.0;  // umol m-2 s-1
};

template <typename T>
T mse_loss(const PhotoParamsT<T>& p, const std::vector<LeafObservation>& obs) {
  if (obs.empty()) throw EmptyObservations();
  T sum = 0.0;
  for (const auto& o : obs) {
    T d = assimilation(T(o.ci), p) - o.an;
    sum += d * d;
  }
  return sum / static_cast<double>(obs.size());
}

// Loss and dLoss/dvcmax25 at the given vcmax25.
std::pair<double, double> loss_and_gradient(PhotoParams p, double vcmax25,
                                            const std::vector<LeafObservation>& obs);

enum class FitMethod { uniform_sampling, gradient_descent };
std::string_view to_string(FitMethod m);

struct FitResult {
  FitMethod method = FitMethod::uniform_sampling;
  double vcmax_hat = 0.0;
  double loss = 0.0;
  int iterations = 0;
  std::vector<std::pair<double, double>> trajectory;  // (vcmax, loss)
};

nlohmann::json to_json(const FitResult& r);

// Loss at n evenly spaced vcmax values over [lo, hi] (endpoints included);
// ties keep the first. Throws ContractViolation for n < 2.
FitResult fit_uniform(const PhotoParams& p, const std::vector<LeafObservation>& obs,
                      double lo = 10.0, double hi = 100.0, int n = 50);

// vcmax <- vcmax - lr * dL/dvcmax. A step that would raise the loss halves lr
// and is retried (up to 60 halvings, after which the iterate stays), so the
// loss trajectory is nonincreasing. Throws ContractViolation for steps < 1.
FitResult fit_gradient_descent(const PhotoParams& p, const std::vector<LeafObservation>& obs,
                               double vcmax0 = 60.0, int steps = 10, double lr = 2.0);

struct SyntheticSpec {
  int n = 12;
  double ci_lo = 10.0;
  double ci_hi = 80.0;
  double vcmax_true = 38.383;
  double sigma = 0.5;
  std::uint64_t seed = 42;
};

// Model observations at evenly spaced ci plus Gaussian noise from a
// mt19937_64 stream transformed by Box-Muller (portable across standard
// libraries, unlike std::normal_distribution).
std::vector<LeafObservation> synthetic_observations(const PhotoParams& p,
                                                    const SyntheticSpec& spec = {});

// CSV with header `ci_pa,an_umol_m2_s`. Throws IoError on unreadable or
// malformed input.
std::vector<LeafObservation> read_observations(const std::filesystem::path& path);
std::string format_observations(const std::vector<LeafObservation>& obs);

}  // namespace ftrans::leaf
