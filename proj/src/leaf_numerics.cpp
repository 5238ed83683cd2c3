#include "ftrans/leaf_numerics.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace ftrans::leaf {

double daylength(double lat, double decl) {
  constexpr double secs_per_radian = 13750.9871;
  const double lat_epsilon = 10.0 * std::numeric_limits<double>::epsilon();
  const double pole = M_PI / 2.0;
  const double offset_pole = pole - lat_epsilon;
  if (std::abs(lat) >= pole + lat_epsilon || std::abs(decl) >= pole) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double my_lat = std::min(offset_pole, std::max(-offset_pole, lat));
  double temp = -(std::sin(my_lat) * std::sin(decl)) / (std::cos(my_lat) * std::cos(decl));
  temp = std::min(1.0, std::max(-1.0, temp));
  return 2.0 * secs_per_radian * std::acos(temp);
}

std::vector<double> daylength(const std::vector<double>& lat, double decl) {
  std::vector<double> out(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) out[i] = daylength(lat[i], decl);
  return out;
}

double& field(PhotoParams& p, Param which) {
  switch (which) {
    case Param::vcmax25: return p.vcmax25;
    case Param::jmax25: return p.jmax25;
    case Param::rd25: return p.rd25;
    case Param::gamma_star: return p.gamma_star;
    case Param::kc: return p.kc;
    case Param::ko: return p.ko;
    case Param::oi: return p.oi;
    case Param::ca: return p.ca;
    case Param::g0: return p.g0;
    case Param::g1: return p.g1;
    case Param::vpd: return p.vpd;
    case Param::pressure: return p.pressure;
  }
  return p.vcmax25;
}

PhotoParamsT<Dual> seed(const PhotoParams& p, Param active) {
  PhotoParamsT<Dual> d{p.vcmax25, p.jmax25, p.rd25, p.gamma_star, p.kc,  p.ko,
                       p.oi,      p.ca,     p.g0,   p.g1,         p.vpd, p.pressure};
  switch (active) {
    case Param::vcmax25: d.vcmax25.deriv = 1; break;
    case Param::jmax25: d.jmax25.deriv = 1; break;
    case Param::rd25: d.rd25.deriv = 1; break;
    case Param::gamma_star: d.gamma_star.deriv = 1; break;
    case Param::kc: d.kc.deriv = 1; break;
    case Param::ko: d.ko.deriv = 1; break;
    case Param::oi: d.oi.deriv = 1; break;
    case Param::ca: d.ca.deriv = 1; break;
    case Param::g0: d.g0.deriv = 1; break;
    case Param::g1: d.g1.deriv = 1; break;
    case Param::vpd: d.vpd.deriv = 1; break;
    case Param::pressure: d.pressure.deriv = 1; break;
  }
  return d;
}

void validate(const PhotoParams& p) {
  const double fields[] = {p.vcmax25, p.jmax25, p.rd25, p.gamma_star, p.kc,  p.ko,
                           p.oi,      p.ca,     p.g0,   p.g1,         p.vpd, p.pressure};
  for (double f : fields) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw ContractViolation("photosynthesis parameters must be finite and strictly positive");
    }
  }
}

SolveResult solve_ci(const PhotoParams& p, double ci0) {
  if (!(ci0 > 0.0)) throw NonPositiveCi(ci0);
  if (!(ci0 < 2.0 * p.ca)) {
    throw ContractViolation("ci0 must lie below 2*ca (" + std::to_string(2.0 * p.ca) + " Pa)");
  }
  SolveResult r;
  r.ci = detail::secant_bisection(p, ci0, -1, &r.iterations, &r.residual);
  if (r.iterations > kMaxSolveIterations) throw NoConvergence(kMaxSolveIterations, r.residual);
  r.an = assimilation(r.ci, p);
  return r;
}

std::pair<double, double> loss_and_gradient(PhotoParams p, double vcmax25,
                                            const std::vector<LeafObservation>& obs) {
  p.vcmax25 = vcmax25;
  Dual l = mse_loss(seed(p, Param::vcmax25), obs);
  return {l.value, l.deriv};
}

std::string_view to_string(FitMethod m) {
  return m == FitMethod::uniform_sampling ? "uniform_sampling" : "gradient_descent";
}

nlohmann::json to_json(const FitResult& r) {
  nlohmann::json traj = nlohmann::json::array();
  for (auto [v, l] : r.trajectory) traj.push_back({{"vcmax", v}, {"loss", l}});
  return {{"method", to_string(r.method)},
          {"vcmax_hat", r.vcmax_hat},
          {"loss", r.loss},
          {"iterations", r.iterations},
          {"trajectory", traj}};
}

FitResult fit_uniform(const PhotoParams& p, const std::vector<LeafObservation>& obs, double lo,
                      double hi, int n) {
  if (n < 2) throw ContractViolation("uniform sampling needs n >= 2");
  if (obs.empty()) throw EmptyObservations();
  FitResult r;
  r.method = FitMethod::uniform_sampling;
  r.iterations = n;
  PhotoParams q = p;
  std::size_t best = 0;
  for (int k = 0; k < n; ++k) {
    q.vcmax25 = k == n - 1 ? hi : lo + (hi - lo) * k / (n - 1);
    double l = mse_loss(q, obs);
    r.trajectory.emplace_back(q.vcmax25, l);
    if (l < r.trajectory[best].second) best = static_cast<std::size_t>(k);
  }
  r.vcmax_hat = r.trajectory[best].first;
  r.loss = r.trajectory[best].second;
  return r;
}

FitResult fit_gradient_descent(const PhotoParams& p, const std::vector<LeafObservation>& obs,
                               double vcmax0, int steps, double lr) {
  if (steps < 1) throw ContractViolation("gradient descent needs steps >= 1");
  FitResult r;
  r.method = FitMethod::gradient_descent;
  r.iterations = steps;
  double v = vcmax0;
  auto [loss, grad] = loss_and_gradient(p, v, obs);
  r.trajectory.emplace_back(v, loss);
  for (int k = 0; k < steps; ++k) {
    for (int halvings = 0; halvings <= 60; ++halvings) {
      double candidate = v - lr * grad;
      auto [l2, g2] = loss_and_gradient(p, candidate, obs);
      if (l2 <= loss) {
        v = candidate;
        loss = l2;
        grad = g2;
        break;
      }
      lr *= 0.5;
    }
    r.trajectory.emplace_back(v, loss);
  }
  auto best = std::min_element(r.trajectory.begin(), r.trajectory.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
  r.vcmax_hat = best->first;
  r.loss = best->second;
  return r;
}

std::vector<LeafObservation> synthetic_observations(const PhotoParams& p,
                                                    const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  PhotoParams truth = p;
  truth.vcmax25 = spec.vcmax_true;
  std::vector<LeafObservation> out;
  for (int k = 0; k < spec.n; ++k) {
    double ci = spec.n == 1 ? spec.ci_lo
                            : spec.ci_lo + (spec.ci_hi - spec.ci_lo) * k / (spec.n - 1);
    double u1 = uniform();
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
    out.push_back({ci, assimilation(ci, truth) + spec.sigma * z});
  }
  return out;
}

std::vector<LeafObservation> read_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observations file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ci_pa,an_umol_m2_s") {
    throw IoError(path.string() + ": expected header 'ci_pa,an_umol_m2_s'");
  }
  std::vector<LeafObservation> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    }
    try {
      std::size_t used = 0;
      double ci = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing");
      std::string rest = line.substr(comma + 1);
      double an = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing");
      if (!(ci > 0.0)) throw NonPositiveCi(ci);
      out.push_back({ci, an});
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return out;
}

std::string format_observations(const std::vector<LeafObservation>& obs) {
  std::string out = "ci_pa,an_umol_m2_s\n";
  char buf[96];
  for (const auto& o : obs) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", o.ci, o.an);
    out += buf;
  }
  return out;
}

}  // namespace ftrans::leaf
