#include <doctest.h>

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <nlohmann/json.hpp>

#include "ftrans/bench_kernel.hpp"
#include "ftrans/leaf_numerics.hpp"
#include "ftrans/util.hpp"
#include "test_support.hpp"

using namespace ftrans;
using namespace ftrans::leaf;
using doctest::Approx;

namespace {

const nlohmann::json& oracle() {
  static const nlohmann::json j =
      nlohmann::json::parse(read_file(testing::data_dir() / "numerics_oracle.json"));
  return j;
}

std::vector<LeafObservation> frozen() {
  return read_observations(testing::source_dir() / "resources" / "data" / "synthetic_observations.csv");
}

PhotoParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(0.7, 1.3);
  PhotoParams p;
  for (Param k : {Param::vcmax25, Param::jmax25, Param::rd25, Param::gamma_star, Param::kc, Param::ko,
                  Param::oi, Param::ca, Param::g0, Param::g1, Param::vpd, Param::pressure}) {
    field(p, k) *= f(rng);
  }
  return p;
}

// Central difference; nullopt when halving h changes the estimate, which
// means a min/max switch or solver branch lies inside the stencil.
template <typename F>
std::optional<double> smooth_fd(F f, double x) {
  double h = 1e-3 * std::abs(x) + 1e-6;
  double d1 = (f(x + h) - f(x - h)) / (2 * h);
  double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
  if (std::abs(d1 - d2) > 1e-6 * std::max(1.0, std::abs(d1))) return std::nullopt;
  return d1;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-8); }

}  // namespace

// --- day length ----------------------------------------------------------------

TEST_CASE("day length published test points") {
  CHECK(std::abs(daylength(-1.4, 0.1) - 26125.331) < 1e-3);
  CHECK(std::abs(daylength(-1.3, 0.1) - 33030.159) < 1e-3);
  CHECK(std::abs(daylength(-1.5, 0.1) - 0.0) < 1e-3);
  CHECK(std::abs(daylength(1.5, 0.1) - 86400.0) < 1e-3);
  CHECK(std::abs(daylength(M_PI / 2.0, 0.1) - 86400.0) < 1e-3);
  CHECK(std::abs(daylength(-M_PI / 2.0, 0.1)) < 1e-3);
  CHECK(std::isnan(daylength(3.0, 0.1)));
  CHECK(std::isnan(daylength(-1.0, -3.0)));
  CHECK(std::isnan(daylength(M_PI / 1.999, 0.1)));
}

TEST_CASE("day length is elementwise over arrays") {
  auto v = daylength(std::vector<double>{-1.4, -1.3, 3.0}, 0.1);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == daylength(-1.4, 0.1));
  CHECK(v[1] == daylength(-1.3, 0.1));
  CHECK(std::isnan(v[2]));
}

TEST_CASE("property: day length range and hemisphere symmetry") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(-1.6, 1.6);
  std::uniform_real_distribution<double> decl(-1.6, 1.6);
  for (int i = 0; i < 2000; ++i) {
    double a = lat(rng);
    double d = decl(rng);
    double v = daylength(a, d);
    // 2 * 13750.9871 * pi is 86400.0001, so full daylight overshoots by 1e-4 s.
    CHECK((std::isnan(v) || (v >= 0.0 && v <= 86400.0 + 1e-3)));
    double w = daylength(-a, -d);
    if (std::isnan(v)) CHECK(std::isnan(w));
    else CHECK(std::abs(v - w) < 1e-6);
  }
}

// --- dual numbers ------------------------------------------------------------------

TEST_CASE("dual arithmetic rules") {
  Dual a{3.0, 2.0};
  Dual b{5.0, -1.0};
  Dual prod = a * b;
  CHECK(prod.value == 15.0);
  CHECK(prod.deriv == 3.0 * -1.0 + 5.0 * 2.0);
  Dual q = a / b;
  CHECK(q.deriv == Approx((2.0 * 5.0 - 3.0 * -1.0) / 25.0));
  Dual c = 7.0;
  CHECK(c.deriv == 0.0);
  CHECK(sqrt(Dual{4.0, 1.0}).deriv == Approx(0.25));
  CHECK(std::min(a, b).value == 3.0);
}

// --- assimilation ------------------------------------------------------------------

TEST_CASE("assimilation at the compensation point is -rd") {
  PhotoParams p;
  CHECK(assimilation(p.gamma_star, p) == -p.rd25);
  CHECK_THROWS_AS(assimilation(0.0, p), NonPositiveCi);
  CHECK_THROWS_AS(assimilation(-1.0, p), NonPositiveCi);
}

TEST_CASE("assimilation is monotone nondecreasing in ci") {
  PhotoParams p;
  double prev = assimilation(5.0, p);
  for (double ci = 5.0; ci <= 200.0; ci += 0.25) {
    double a = assimilation(ci, p);
    CHECK(a >= prev);
    prev = a;
  }
}

TEST_CASE("dAn/dvcmax at a Rubisco-limited point matches the closed form") {
  PhotoParams p;
  double ci = 20.0;
  REQUIRE(rubisco_rate(ci, p) < electron_rate(ci, p));
  Dual an = assimilation(Dual(ci), seed(p, Param::vcmax25));
  double closed = (ci - p.gamma_star) / (ci + p.kc * (1.0 + p.oi / p.ko));
  CHECK(an.deriv == Approx(closed).epsilon(1e-12));
  auto fd = smooth_fd([&](double v) { PhotoParams q = p; q.vcmax25 = v; return assimilation(ci, q); }, p.vcmax25);
  REQUIRE(fd);
  CHECK(rel_err(an.deriv, *fd) < 1e-6);
}

TEST_CASE("validate rejects nonpositive parameters") {
  PhotoParams p;
  CHECK_NOTHROW(validate(p));
  p.vpd = 0.0;
  CHECK_THROWS_AS(validate(p), ContractViolation);
}

// --- solver --------------------------------------------------------------------------

TEST_CASE("solver contract at default parameters") {
  PhotoParams p;
  auto a = solve_ci(p, 35.0);
  auto b = solve_ci(p, 70.0);
  CHECK(std::abs(ci_residual(a.ci, p)) <= 1e-6);
  CHECK(std::abs(ci_residual(b.ci, p)) <= 1e-6);
  CHECK(std::abs(a.ci - b.ci) < 1e-3);
  CHECK(a.iterations <= kMaxSolveIterations);
  CHECK(a.an == Approx(assimilation(a.ci, p)));
  // Independent Brent root from the Python oracle.
  CHECK(std::abs(a.ci - oracle()["ci_root_default"].get<double>()) < 1e-4);
}

TEST_CASE("bisection oracle: exactly one sign change and the same root") {
  PhotoParams p;
  const int n = 1000000;
  const double lo = 0.1;
  const double hi = 2.0 * p.ca;
  int changes = 0;
  double root = 0.0;
  double prev = ci_residual(lo, p);
  for (int i = 1; i <= n; ++i) {
    double x = lo + (hi - lo) * i / n;
    double f = ci_residual(x, p);
    if ((prev < 0) != (f < 0)) {
      ++changes;
      root = x;
    }
    prev = f;
  }
  CHECK(changes == 1);
  CHECK(std::abs(solve_ci(p, 35.0).ci - root) < (hi - lo) / n + 1e-6);
}

TEST_CASE("solver limiting case: open stomata pull ci to ca") {
  PhotoParams p;
  p.g1 = 1e-9;
  p.g0 = 1e3;
  auto r = solve_ci(p, 35.0);
  CHECK(std::abs(r.ci - p.ca) < 0.5);
}

TEST_CASE("solver preconditions") {
  PhotoParams p;
  CHECK_THROWS_AS(solve_ci(p, 0.0), NonPositiveCi);
  CHECK_THROWS_AS(solve_ci(p, 2.0 * p.ca), ContractViolation);
}

TEST_CASE("property: residual postcondition over random parameter draws") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> start(0.2, 0.95);
  for (int i = 0; i < 100; ++i) {
    PhotoParams p = random_params(rng);
    auto r = solve_ci(p, start(rng) * 2.0 * p.ca);
    CHECK(std::abs(ci_residual(r.ci, p)) <= 1e-6);
    CHECK(r.ci > 0.0);
    CHECK(r.ci < 2.0 * p.ca);
  }
}

// --- gradients ---------------------------------------------------------------------

TEST_CASE("property: dual gradients match central differences") {
  std::mt19937_64 rng(2023);
  auto obs = frozen();
  int checked_loss = 0, checked_an = 0, checked_solve = 0;
  for (int draw = 0; draw < 50; ++draw) {
    PhotoParams p = random_params(rng);

    auto fd_loss = smooth_fd([&](double v) { PhotoParams q = p; q.vcmax25 = v; return mse_loss(q, obs); },
                             p.vcmax25);
    if (fd_loss) {
      CHECK(rel_err(loss_and_gradient(p, p.vcmax25, obs).second, *fd_loss) < 1e-4);
      ++checked_loss;
    }

    double ci = 10.0 + 5.0 * (draw % 14);
    auto fd_an = smooth_fd([&](double v) { PhotoParams q = p; q.vcmax25 = v; return assimilation(ci, q); },
                           p.vcmax25);
    if (fd_an) {
      CHECK(rel_err(assimilation(Dual(ci), seed(p)).deriv, *fd_an) < 1e-4);
      ++checked_an;
    }

    int iters = solve_ci(p, 35.0 * p.ca / 40.0).iterations;
    auto unrolled = [&](double v) {
      PhotoParams q = p;
      q.vcmax25 = v;
      return solve_ci_unrolled(q, 35.0 * p.ca / 40.0, iters);
    };
    auto fd_solve = smooth_fd(unrolled, p.vcmax25);
    if (fd_solve) {
      Dual d = solve_ci_unrolled(seed(p), 35.0 * p.ca / 40.0, iters);
      CHECK(d.value == unrolled(p.vcmax25));
      CHECK(rel_err(d.deriv, *fd_solve) < 1e-4);
      ++checked_solve;
    }
  }
  // Kinks are rare; nearly every draw must be usable.
  CHECK(checked_loss >= 45);
  CHECK(checked_an >= 45);
  CHECK(checked_solve >= 40);
}

// --- loss and fits -------------------------------------------------------------------

TEST_CASE("mse examples") {
  PhotoParams p;
  std::vector<LeafObservation> exact;
  for (double ci : {12.0, 25.0, 50.0}) exact.push_back({ci, assimilation(ci, p)});
  CHECK(mse_loss(p, exact) == 0.0);
  CHECK(mse_loss(p, {{30.0, assimilation(30.0, p) + 2.0}}) == Approx(4.0));
  CHECK_THROWS_AS(mse_loss(p, {}), EmptyObservations);
}

TEST_CASE("loss on the frozen dataset matches the independent recomputation") {
  PhotoParams p;
  auto obs = frozen();
  for (auto& [k, v] : oracle()["loss_at"].items()) {
    p.vcmax25 = std::stod(k);
    INFO("vcmax " << k);
    CHECK(mse_loss(p, obs) == Approx(v.get<double>()).epsilon(1e-12));
  }
}

TEST_CASE("synthetic observations match the independent generator") {
  auto obs = synthetic_observations(PhotoParams{});
  const auto& ref = oracle()["synthetic"];
  REQUIRE(obs.size() == ref.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(obs[i].ci == Approx(ref[i][0].get<double>()).epsilon(1e-14));
    CHECK(obs[i].an == Approx(ref[i][1].get<double>()).epsilon(1e-12));
  }
  // The CSV fixture is the same data at six decimals.
  auto csv = frozen();
  REQUIRE(csv.size() == obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(std::abs(csv[i].ci - obs[i].ci) <= 5e-7);
    CHECK(std::abs(csv[i].an - obs[i].an) <= 5e-7);
  }
  CHECK(format_observations(obs) == read_file(testing::source_dir() / "resources" / "data" /
                                              "synthetic_observations.csv"));
}

TEST_CASE("observation CSV errors") {
  testing::TempDir dir;
  CHECK_THROWS_AS(read_observations(dir.path() / "missing.csv"), IoError);
  write_file_atomic(dir.path() / "bad.csv", "ci_pa,an_umol_m2_s\n10,abc\n");
  CHECK_THROWS_AS(read_observations(dir.path() / "bad.csv"), IoError);
  write_file_atomic(dir.path() / "hdr.csv", "x,y\n10,1\n");
  CHECK_THROWS_AS(read_observations(dir.path() / "hdr.csv"), IoError);
}

TEST_CASE("uniform sampling examples") {
  PhotoParams p;
  double on_grid = 10.0 + 90.0 * 15 / 49;
  PhotoParams truth = p;
  truth.vcmax25 = on_grid;
  std::vector<LeafObservation> exact;
  for (double ci = 10.0; ci <= 80.0; ci += 7.0) exact.push_back({ci, assimilation(ci, truth)});
  auto r = fit_uniform(p, exact);
  CHECK(r.vcmax_hat == Approx(on_grid).epsilon(1e-12));
  CHECK(r.loss < 1e-20);
  CHECK(r.trajectory.size() == 50);

  auto two = fit_uniform(p, exact, 10.0, 100.0, 2);
  CHECK(two.trajectory.size() == 2);
  PhotoParams at_lo = p, at_hi = p;
  at_lo.vcmax25 = 10.0;
  at_hi.vcmax25 = 100.0;
  CHECK(two.vcmax_hat == (mse_loss(at_lo, exact) <= mse_loss(at_hi, exact) ? 10.0 : 100.0));
  CHECK_THROWS_AS(fit_uniform(p, exact, 10.0, 100.0, 1), ContractViolation);
}

TEST_CASE("uniform sampling on the frozen dataset") {
  auto r = fit_uniform(PhotoParams{}, frozen());
  CHECK(r.vcmax_hat == Approx(oracle()["uniform50_argmin"].get<double>()).epsilon(1e-12));
  CHECK(r.loss == Approx(oracle()["uniform50_min_loss"].get<double>()).epsilon(1e-10));
  CHECK(std::abs(r.vcmax_hat - 38.383) <= 90.0 / 49.0);
  double best = r.trajectory.front().second;
  for (auto& [v, l] : r.trajectory) best = std::min(best, l);
  CHECK(best == r.loss);
}

TEST_CASE("gradient descent from the truth of noiseless data stays put") {
  PhotoParams truth;
  truth.vcmax25 = 38.383;
  std::vector<LeafObservation> exact;
  for (double ci = 10.0; ci <= 80.0; ci += 5.0) exact.push_back({ci, assimilation(ci, truth)});
  auto r = fit_gradient_descent(PhotoParams{}, exact, 38.383, 10);
  CHECK(std::abs(r.vcmax_hat - 38.383) < 1e-6);
}

TEST_CASE("gradient descent on the frozen dataset") {
  auto obs = frozen();
  auto gd = fit_gradient_descent(PhotoParams{}, obs, 60.0, 50, 2.0);
  auto grid = fit_uniform(PhotoParams{}, obs);
  // Converges on the loss minimum found by the 0.01 fine grid.
  CHECK(std::abs(gd.vcmax_hat - oracle()["fine_grid_argmin"].get<double>()) < 0.01);
  CHECK(gd.loss <= oracle()["fine_grid_min_loss"].get<double>() + 1e-9);
  CHECK(gd.loss <= grid.loss);
  CHECK(gd.iterations == 50);
  CHECK(gd.trajectory.size() == 51);
  for (std::size_t i = 1; i < gd.trajectory.size(); ++i) {
    CHECK(gd.trajectory[i].second <= gd.trajectory[i - 1].second);
  }
  CHECK_THROWS_AS(fit_gradient_descent(PhotoParams{}, obs, 60.0, 0), ContractViolation);
}

TEST_CASE("property: gradient descent loss is nonincreasing from random starts") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> start(12.0, 95.0);
  std::uniform_real_distribution<double> lr(0.5, 20.0);
  auto obs = frozen();
  for (int i = 0; i < 30; ++i) {
    auto r = fit_gradient_descent(PhotoParams{}, obs, start(rng), 10, lr(rng));
    for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
      CHECK(r.trajectory[k].second <= r.trajectory[k - 1].second);
    }
    CHECK(r.loss >= 0.0);
  }
}

// --- benchmark kernel -----------------------------------------------------------------

TEST_CASE("benchmark kernel") {
  auto one = bench_kernel(1);
  CHECK(one.n == 1);
  CHECK(one.converged == 1);
  auto j = to_json(one);
  CHECK(j.contains("solves_per_second"));
  CHECK(j.contains("results_fingerprint"));
  CHECK_THROWS_AS(bench_kernel(0), ContractViolation);

  auto a = bench_kernel(2000);
  auto b = bench_kernel(2000);
  CHECK(a.fingerprint == b.fingerprint);
  CHECK(a.failed == 0);
  CHECK(a.ci_min == Approx(oracle()["ci_root_default"].get<double>()).epsilon(1e-6));
}

TEST_CASE("parallel kernel is bitwise identical to the serial reference") {
  auto ci0 = linspace(35.0, 70.0, 3001);
  auto s = solve_batch_serial(PhotoParams{}, ci0);
  for (int w : {0, 1, 2, 4}) {
    auto par = solve_batch_parallel(PhotoParams{}, ci0, w);
    CHECK(results_fingerprint(par) == results_fingerprint(s));
  }
  CHECK(linspace(1.0, 2.0, 1) == std::vector<double>{1.0});
  CHECK(linspace(0.0, 1.0, 3) == std::vector<double>{0.0, 0.5, 1.0});
}
