#include "normstab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "normstab/errors.hpp"

namespace normstab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct DenseStep {
  Vector r1, r2, r3, r4, r5;
  double t0 = 0.0, h = 0.0;

  Vector at(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

}  // namespace

Trajectory integrate(const VectorFieldSpec& fs, const Vector& u0, double t_max,
                     const IntegratorOptions& opt) {
  if (u0.size() != fs.n) throw Error(ErrorCode::InvalidArgument, "integrate: dimension mismatch");
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "integrate: tolerances must be positive");
  }
  if (!(t_max >= 0.0)) throw Error(ErrorCode::InvalidArgument, "integrate: t_max must be >= 0");
  if (!fs.contains(u0)) throw Error(ErrorCode::DomainExit, "initial state outside the domain");

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(u0);
  if (t_max == 0.0) return traj;

  const bool sampled = opt.sample_dt > 0.0;
  long next_sample = 1;
  auto sample_time = [&](long k) { return std::min(t_max, k * opt.sample_dt); };

  auto scaled_norm = [&](const Vector& err, const Vector& y0, const Vector& y1) {
    const Vector sc = (opt.atol + opt.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
    return std::sqrt((err.cwiseQuotient(sc)).squaredNorm() / static_cast<double>(err.size()));
  };

  double t = 0.0;
  Vector y = u0;
  Vector k1 = fs(y);
  ++traj.stats.evaluations;

  double h = opt.initial_step;
  if (h <= 0.0) {
    const Vector sc = (opt.atol + opt.rtol * y.cwiseAbs().array()).matrix();
    const double dn0 = std::sqrt(y.cwiseQuotient(sc).squaredNorm() / y.size());
    const double dn1 = std::sqrt(k1.cwiseQuotient(sc).squaredNorm() / y.size());
    h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
  }
  h = std::min(h, t_max);
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

  Vector k2, k3, k4, k5, k6, k7, y1, ytmp;
  bool last_rejected = false;
  while (t < t_max) {
    if (traj.stats.accepted + traj.stats.rejected >= opt.max_steps) {
      throw Error(ErrorCode::StepSizeUnderflow, "step budget exhausted at t = " + std::to_string(t));
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream msg;
      msg << "step size " << h << " underflow at t = " << t;
      throw Error(ErrorCode::StepSizeUnderflow, msg.str());
    }
    const bool final_step = t + h >= t_max * (1.0 - 1e-15);
    if (final_step) h = t_max - t;

    ytmp = y + h * a21 * k1;
    k2 = fs(ytmp);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    k3 = fs(ytmp);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    k4 = fs(ytmp);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    k5 = fs(ytmp);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    k6 = fs(ytmp);
    y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    traj.stats.evaluations += 5;

    if (!y1.allFinite() || !fs.contains(y1)) {
      if (h > 1e-10 * std::max(1.0, std::abs(t))) {
        h *= 0.25;
        ++traj.stats.rejected;
        last_rejected = true;
        continue;
      }
      throw Error(ErrorCode::DomainExit, "trajectory left the field's domain at t = " +
                                             std::to_string(t));
    }
    k7 = fs(y1);
    ++traj.stats.evaluations;
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = scaled_norm(err, y, y1);
    if (!std::isfinite(en)) {
      h *= 0.25;
      ++traj.stats.rejected;
      last_rejected = true;
      continue;
    }
    if (en > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      ++traj.stats.rejected;
      last_rejected = true;
      continue;
    }

    ++traj.stats.accepted;
    traj.stats.max_error_estimate = std::max(traj.stats.max_error_estimate, en);
    const double t1 = final_step ? t_max : t + h;

    if (sampled) {
      DenseStep ds;
      ds.t0 = t;
      ds.h = h;
      ds.r1 = y;
      ds.r2 = y1 - y;
      ds.r3 = h * k1 - ds.r2;
      ds.r4 = ds.r2 - h * k7 - ds.r3;
      ds.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (next_sample * opt.sample_dt <= t_max * (1.0 + 1e-14) &&
             sample_time(next_sample) <= t1) {
        const double ts = sample_time(next_sample);
        traj.times.push_back(ts);
        traj.states.push_back(ts >= t1 ? y1 : ds.at(ts));
        ++next_sample;
      }
    } else {
      traj.times.push_back(t1);
      traj.states.push_back(y1);
    }

    t = t1;
    y = y1;
    k1 = k7;

    if (opt.stop && opt.stop(t, y)) {
      if (sampled && traj.times.back() < t) {
        traj.times.push_back(t);
        traj.states.push_back(y);
      }
      traj.stopped_by_predicate = true;
      break;
    }

    double factor = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
    factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
    h *= factor;
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    last_rejected = false;
  }
  if (sampled && !traj.stopped_by_predicate && traj.times.back() < t_max) {
    traj.times.push_back(t_max);
    traj.states.push_back(y);
  }
  return traj;
}

Trajectory integrate(const VectorFieldSpec& fs, const Vector& u0, double t_max, double tol) {
  IntegratorOptions opt;
  opt.rtol = opt.atol = tol;
  return integrate(fs, u0, t_max, opt);
}

ManifoldDistance dist_to_manifold(const Vector& u, const ManifoldChart& chart, int grid_per_dim) {
  ManifoldDistance out;
  const int m = chart.m;
  if (m == 0) {
    out.zeta = Vector(0);
    out.dist = (u - chart.base_point()).norm();
    return out;
  }
  if (grid_per_dim <= 0) grid_per_dim = m == 1 ? 721 : (m == 2 ? 61 : 15);
  const double r = chart.chart_radius;

  // Coarse search over the cube [-r, r]^m restricted to the chart ball.
  Vector best_zeta = Vector::Zero(m);
  double best = (u - chart.at(best_zeta)).squaredNorm();
  std::vector<int> idx(m, 0);
  const double step = grid_per_dim > 1 ? 2.0 * r / (grid_per_dim - 1) : 0.0;
  while (true) {
    Vector z(m);
    for (int i = 0; i < m; ++i) z(i) = -r + idx[i] * step;
    if (z.norm() <= r * (1.0 + 1e-12)) {
      const double val = (u - chart.at(z)).squaredNorm();
      if (val < best) {
        best = val;
        best_zeta = z;
      }
    }
    int d = 0;
    while (d < m && ++idx[d] == grid_per_dim) idx[d++] = 0;
    if (d == m) break;
  }

  // Gauss-Newton refinement.
  Vector z = best_zeta;
  double f = best;
  bool ok = true;
  for (int it = 0; it < 60; ++it) {
    const Vector res = chart.at(z) - u;
    const Matrix jac = chart.derivative(z);
    const Vector step_gn = (jac.transpose() * jac).ldlt().solve(-(jac.transpose() * res));
    if (!step_gn.allFinite()) {
      ok = false;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-6) {
      Vector trial = z + t * step_gn;
      if (trial.norm() > r) trial *= r / trial.norm();
      const double ft = (u - chart.at(trial)).squaredNorm();
      if (ft <= f) {
        z = trial;
        f = ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted || t * step_gn.norm() < 1e-15 * (1.0 + z.norm())) break;
  }
  if (!ok || !(f <= best)) {
    out.refined = false;
    out.zeta = best_zeta;
    out.dist = std::sqrt(best);
    return out;
  }
  out.zeta = z;
  out.dist = std::sqrt(f);
  return out;
}

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Converged: return "Converged";
    case Outcome::LeftNeighborhood: return "LeftNeighborhood";
    case Outcome::Undetermined: return "Undetermined";
  }
  return "?";
}

RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& d,
                             const ConvergenceOptions& options, double floor) {
  RateFit fit;
  std::vector<std::size_t> above;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > floor && std::isfinite(d[i])) above.push_back(i);
  }
  const std::size_t want = std::max<std::size_t>(
      options.min_fit_samples,
      static_cast<std::size_t>(std::ceil(options.fit_fraction * static_cast<double>(d.size()))));
  if (above.size() < static_cast<std::size_t>(options.min_fit_samples)) return fit;
  const std::size_t count = std::min(want, above.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t k = above.size() - count; k < above.size(); ++k) {
    const double ti = t[above[k]];
    const double yi = std::log(d[above[k]]);
    st += ti;
    sy += yi;
    stt += ti * ti;
    sty += ti * yi;
  }
  const double nn = static_cast<double>(count);
  const double var_t = stt - st * st / nn;
  if (var_t <= 0.0) return fit;
  const double slope = (sty - st * sy / nn) / var_t;
  const double intercept = (sy - slope * st) / nn;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / nn;
  for (std::size_t k = above.size() - count; k < above.size(); ++k) {
    const double ti = t[above[k]];
    const double yi = std::log(d[above[k]]);
    ss_res += std::pow(yi - (intercept + slope * ti), 2);
    ss_tot += std::pow(yi - mean_y, 2);
  }
  fit.rate = -slope;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  fit.samples = static_cast<int>(count);
  fit.valid = ss_tot > 0.0;
  return fit;
}

Vector refine_limit(const VectorFieldSpec& fs, const Trajectory& traj) {
  Vector u = traj.states.back();
  for (int it = 0; it < 5; ++it) {
    const Vector f = fs(u);
    if (f.norm() <= 1e-15 * (1.0 + u.norm())) break;
    const Matrix jac = fs.jacobian_at(u);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jac * jac);
    cod.setThreshold(1e-8);
    const Vector step = jac * cod.solve(-f);
    if (!step.allFinite()) break;
    u += step;
  }
  return u;
}

ConvergenceReport assess_convergence(const Trajectory& traj, const VectorFieldSpec& fs,
                                     const ManifoldChart& chart, double rho,
                                     const ConvergenceOptions& options) {
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "assess_convergence: empty trajectory");
  ConvergenceReport rep;
  rep.rho = rho;
  rep.delta = (traj.states.front() - chart.base_point()).norm();
  rep.dist_series.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double d = dist_to_manifold(traj.states[i], chart).dist;
    rep.dist_series.push_back(d);
    if (d > rho) {
      rep.outcome = Outcome::LeftNeighborhood;
      rep.t_exit = traj.times[i];
      return rep;
    }
  }
  if (traj.size() < 2) {
    rep.note = "single-sample trajectory";
    return rep;
  }
  rep.u_inf = refine_limit(fs, traj);
  const double eq_res = fs(rep.u_inf).norm();
  if (!(eq_res <= options.eps_eq)) {
    std::ostringstream msg;
    msg << "limit candidate is not an equilibrium (||F|| = " << eq_res << ")";
    rep.note = msg.str();
    return rep;
  }
  std::vector<double> d;
  d.reserve(traj.size());
  for (const Vector& u : traj.states) d.push_back((u - rep.u_inf).norm());
  const double floor = options.noise_floor * (1.0 + rep.u_inf.norm());
  if (std::all_of(d.begin(), d.end(), [&](double v) { return v <= options.stationary_tol; })) {
    rep.outcome = Outcome::Converged;
    rep.fit_r2 = 1.0;
    rep.note = "stationary at an equilibrium";
    return rep;
  }
  const RateFit fit = fit_exponential_rate(traj.times, d, options, floor);
  rep.rate = fit.rate;
  rep.fit_r2 = fit.r2;
  if (fit.valid && fit.rate > 0.0 && fit.r2 >= options.min_r2) {
    rep.outcome = Outcome::Converged;
  } else {
    std::ostringstream msg;
    msg << "no exponential decay detected (rate " << fit.rate << ", r2 " << fit.r2 << ", "
        << fit.samples << " samples)";
    rep.note = msg.str();
  }
  return rep;
}

SimulationResult simulate(const VectorFieldSpec& fs, const ManifoldChart& chart, const Vector& u0,
                          double t_max, double rho, const IntegratorOptions& integrator,
                          const ConvergenceOptions& options) {
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be positive");
  IntegratorOptions io = integrator;
  const auto user_stop = integrator.stop;
  io.stop = [&](double t, const Vector& u) {
    if (user_stop && user_stop(t, u)) return true;
    return dist_to_manifold(u, chart).dist > rho;
  };
  SimulationResult out;
  out.trajectory = integrate(fs, u0, t_max, io);
  out.report = assess_convergence(out.trajectory, fs, chart, rho, options);
  return out;
}

double estimate_rate_vs_gap(const ConvergenceReport& report, const SpectralSplit& split) {
  if (report.outcome != Outcome::Converged) {
    throw Error(ErrorCode::InvalidArgument, "rate comparison needs a converged trajectory");
  }
  if (split.ms == 0) throw Error(ErrorCode::NoStablePart, "spectral split has no stable part");
  Eigen::EigenSolver<Matrix> es(split.As, false);
  double min_re = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    min_re = std::min(min_re, es.eigenvalues()(i).real());
  }
  return report.rate / min_re;
}

}  // namespace normstab
