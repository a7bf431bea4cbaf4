#include "normstab/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "normstab/errors.hpp"

namespace normstab {

Flux::Flux(std::string kind, std::vector<double> params)
    : kind_(std::move(kind)), params_(std::move(params)) {
  if (kind_ == "identity") {
    if (!params_.empty()) throw Error(ErrorCode::InvalidArgument, "identity flux takes no parameters");
  } else if (kind_ == "linear") {
    if (params_.size() != 1 || !(params_[0] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "linear flux needs one positive slope");
    }
  } else if (kind_ == "tanh") {
    if (params_.empty()) params_ = {0.1};
    if (params_.size() != 1 || !(params_[0] > -1.0) || !std::isfinite(params_[0])) {
      throw Error(ErrorCode::InvalidArgument, "tanh flux needs one amplitude b > -1");
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown flux kind '" + kind_ + "'");
  }
}

double Flux::sigma(double r) const {
  if (kind_ == "linear") return params_[0] * r;
  if (kind_ == "tanh") return r + params_[0] * std::tanh(r);
  return r;
}

double Flux::dsigma(double r) const {
  if (kind_ == "linear") return params_[0];
  if (kind_ == "tanh") {
    const double c = 1.0 / std::cosh(r);
    return 1.0 + params_[0] * c * c;
  }
  return 1.0;
}

double Flux::c1() const {
  if (kind_ == "linear") return params_[0];
  if (kind_ == "tanh") return std::min(1.0, 1.0 + params_[0]);
  return 1.0;
}

double Flux::c2() const {
  if (kind_ == "linear") return params_[0];
  if (kind_ == "tanh") return std::max(1.0, 1.0 + params_[0]);
  return 1.0;
}

WaveProblem::WaveProblem(double a_, Flux flux_) : a(a_), flux(std::move(flux_)) {
  if (!(a > 0.0 && a < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "bistability parameter a must lie in (0, 1/2)");
  }
}

double WaveProblem::df(double u) const {
  return -3.0 * u * u + 2.0 * (1.0 + a) * u - a;
}

double WaveProblem::F(double y) const {
  const double y2 = y * y;
  return -y2 * y2 / 4.0 + (1.0 + a) * y2 * y / 3.0 - a * y2 / 2.0;
}

double WaveProblem::G(double y) const {
  if (y == 0.0) return 0.0;
  auto integrand = [this](double r) { return flux.dsigma(r) * r; };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, y, 6,
                                                                        1e-13);
}

PhaseField phase_field(const WaveProblem& wp, double V) {
  if (!(V >= 0.0)) throw Error(ErrorCode::InvalidArgument, "wave speed must be nonnegative");
  PhaseField pf;
  VectorFieldSpec& fs = pf.field;
  fs.n = 2;
  fs.center = Vector::Zero(2);
  fs.name = "phase-plane";
  fs.rhs = [wp, V](const Vector& u) {
    Vector out(2);
    out << u(1), (V * u(1) - wp.f(u(0))) / wp.flux.dsigma(u(1));
    return out;
  };
  const double s0 = wp.flux.dsigma(0.0);
  pf.H0.resize(2, 2);
  pf.H0 << 0.0, 1.0, -wp.df(0.0) / s0, V / s0;
  pf.H1.resize(2, 2);
  pf.H1 << 0.0, 1.0, -wp.df(1.0) / s0, V / s0;
  pf.lambda1 = (V + std::sqrt(V * V + 4.0 * wp.a * s0)) / (2.0 * s0);
  pf.lambda2 = (V - std::sqrt(V * V + 4.0 * wp.a * s0)) / (2.0 * s0);
  pf.mu = (V - std::sqrt(V * V + 4.0 * (1.0 - wp.a) * s0)) / (2.0 * s0);
  return pf;
}

const char* to_string(ShotOutcome o) noexcept {
  switch (o) {
    case ShotOutcome::FellBack: return "FellBack";
    case ShotOutcome::Overshot: return "Overshot";
    case ShotOutcome::Connected: return "Connected";
  }
  return "?";
}

ShotResult shoot(const WaveProblem& wp, double V, const ShootOptions& opt) {
  const PhaseField pf = phase_field(wp, V);
  Vector u0(2);
  u0 << 1.0 / pf.lambda1, 1.0;
  u0 *= opt.eps_launch / u0.norm();

  ShotResult res;
  res.V = V;
  bool decided = false;
  IntegratorOptions io;
  io.rtol = io.atol = opt.tol;
  io.max_step = opt.max_step;
  io.sample_dt = opt.sample_ds;
  io.stop = [&](double, const Vector& u) {
    const double dist = std::hypot(u(0) - 1.0, u(1));
    if (dist < opt.eps_connect) {
      res.outcome = ShotOutcome::Connected;
    } else if (u(0) >= 1.0) {
      res.outcome = ShotOutcome::Overshot;
    } else if (u(1) <= 0.0) {
      res.outcome = ShotOutcome::FellBack;
    } else {
      return false;
    }
    decided = true;
    return true;
  };
  res.path = integrate(pf.field, u0, opt.s_max, io);
  if (!decided) {
    throw Error(ErrorCode::Inconclusive,
                "shooting path stayed in the first quadrant up to s = " + std::to_string(opt.s_max));
  }
  res.closest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < res.path.size(); ++k) {
    const Vector& u = res.path.states[k];
    const double d = std::hypot(u(0) - 1.0, u(1));
    if (d < res.closest) {
      res.closest = d;
      res.closest_index = k;
    }
  }
  return res;
}

namespace {

struct Hermite {
  double value, slope;
};

Hermite hermite(double t, double dx, double y0, double m0, double y1, double m1) {
  const double t2 = t * t, t3 = t2 * t;
  const double v = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * dx * m0 + (-2 * t3 + 3 * t2) * y1 +
                   (t3 - t2) * dx * m1;
  const double d = ((6 * t2 - 6 * t) * y0 + (-6 * t2 + 6 * t) * y1) / dx + (3 * t2 - 4 * t + 1) * m0 +
                   (3 * t2 - 2 * t) * m1;
  return {v, d};
}

}  // namespace

WaveProfile::WaveProfile(const WaveProblem& wp, double V, std::vector<double> s,
                         std::vector<double> w, std::vector<double> z)
    : V_(V), s_(std::move(s)), w_(std::move(w)), z_(std::move(z)) {
  if (s_.size() < 4 || w_.size() != s_.size() || z_.size() != s_.size()) {
    throw Error(ErrorCode::InvalidArgument, "profile needs at least four matching samples");
  }
  for (std::size_t k = 1; k < s_.size(); ++k) {
    if (!(s_[k] > s_[k - 1])) throw Error(ErrorCode::InvalidArgument, "profile abscissae must increase");
  }
  const PhaseField pf = phase_field(wp, V);
  lambda1_ = pf.lambda1;
  mu_ = pf.mu;
  zp_.resize(s_.size());
  for (std::size_t k = 0; k < s_.size(); ++k) {
    zp_[k] = (V * z_[k] - wp.f(w_[k])) / wp.flux.dsigma(z_[k]);
  }
}

std::array<double, 3> WaveProfile::at(double s) const {
  if (s <= s_.front()) {
    const double e = std::exp(lambda1_ * (s - s_.front()));
    const double w0 = w_.front();
    return {w0 * e, lambda1_ * w0 * e, lambda1_ * lambda1_ * w0 * e};
  }
  if (s >= s_.back()) {
    const double c = w_.back() - 1.0;
    const double e = std::exp(mu_ * (s - s_.back()));
    return {1.0 + c * e, c * mu_ * e, c * mu_ * mu_ * e};
  }
  const std::size_t j = static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin());
  const std::size_t i = j - 1;
  const double dx = s_[j] - s_[i];
  const double t = (s - s_[i]) / dx;
  const Hermite hw = hermite(t, dx, w_[i], z_[i], w_[j], z_[j]);
  const Hermite hz = hermite(t, dx, z_[i], zp_[i], z_[j], zp_[j]);
  return {hw.value, hz.value, hz.slope};
}

bool WaveProfile::monotone() const {
  if (s_.empty()) return false;
  for (double z : z_) {
    if (!(z > 0.0)) return false;
  }
  return w_.front() > 0.0 && w_.back() < 1.0 && lambda1_ > 0.0 && mu_ < 0.0;
}

namespace {

// Abscissa in [s0, s1] where the cubic Hermite interpolant of w reaches 1/2.
double half_crossing(double s0, double w0, double z0, double s1, double w1, double z1) {
  const double dx = s1 - s0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (hermite(mid, dx, w0, z0, w1, z1).value < 0.5 ? lo : hi) = mid;
  }
  return s0 + 0.5 * (lo + hi) * dx;
}

}  // namespace

WaveProfile build_profile(const WaveProblem& wp, double V, const ShootOptions& opt) {
  const PhaseField pf = phase_field(wp, V);
  IntegratorOptions io;
  io.rtol = io.atol = opt.tol;
  io.max_step = opt.max_step;
  io.sample_dt = opt.sample_ds;

  Vector start(2);
  start << 1.0 / pf.lambda1, 1.0;
  start *= opt.eps_launch / start.norm();
  io.stop = [](double, const Vector& u) { return u(0) >= 0.5 || u(1) <= 0.0; };
  const Trajectory fwd = integrate(pf.field, start, opt.s_max, io);

  VectorFieldSpec back = pf.field;
  back.rhs = [f = pf.field.rhs](const Vector& u) { return Vector(-f(u)); };
  start << -1.0, -pf.mu;
  start *= opt.eps_launch / start.norm();
  start(0) += 1.0;
  io.stop = [](double, const Vector& u) { return u(0) <= 0.5 || u(1) <= 0.0; };
  const Trajectory bwd = integrate(back, start, opt.s_max, io);

  auto first_index = [](const Trajectory& t, bool upward) {
    std::size_t k = 0;
    while (k < t.size() && (upward ? t.states[k](0) < 0.5 : t.states[k](0) > 0.5)) ++k;
    return k;
  };
  const std::size_t jf = first_index(fwd, true), jb = first_index(bwd, false);
  if (jf < 2 || jb < 2 || jf == fwd.size() || jb == bwd.size() || fwd.states[jf](1) <= 0.0 ||
      bwd.states[jb](1) <= 0.0) {
    throw Error(ErrorCode::NonConvergence, "manifold branches do not reach w = 1/2 monotonically");
  }
  const Vector& fa = fwd.states[jf - 1];
  const Vector& fb = fwd.states[jf];
  const double dxf = fwd.times[jf] - fwd.times[jf - 1];
  const double sf = half_crossing(fwd.times[jf - 1], fa(0), fa(1), fwd.times[jf], fb(0), fb(1));
  // Backward branch in forward orientation: s = -tau.
  const Vector& ba = bwd.states[jb];
  const Vector& bb = bwd.states[jb - 1];
  const double dxb = bwd.times[jb] - bwd.times[jb - 1];
  const double sb = half_crossing(-bwd.times[jb], ba(0), ba(1), -bwd.times[jb - 1], bb(0), bb(1));

  std::vector<double> s, w, z;
  for (std::size_t k = 0; k < jf; ++k) {
    s.push_back(fwd.times[k] - sf);
    w.push_back(fwd.states[k](0));
    z.push_back(fwd.states[k](1));
  }
  for (std::size_t k = jb; k-- > 0;) {
    s.push_back(-bwd.times[k] - sb);
    w.push_back(bwd.states[k](0));
    z.push_back(bwd.states[k](1));
  }
  // z at the joint from each side.
  const double zf = hermite((sf - fwd.times[jf - 1]) / dxf, dxf, fa(1), pf.field(fa)(1), fb(1),
                            pf.field(fb)(1)).value;
  const double zb = hermite((sb + bwd.times[jb]) / dxb, dxb, ba(1), pf.field(ba)(1), bb(1),
                            pf.field(bb)(1)).value;
  WaveProfile profile(wp, V, std::move(s), std::move(w), std::move(z));
  profile.join_mismatch = std::abs(zf - zb);
  return profile;
}

SpeedSearch find_speed(const WaveProblem& wp, double lo, double hi, double tol_V,
                       const ShootOptions& opt) {
  if (!(lo >= 0.0) || !(hi > lo) || !(tol_V > 0.0)) {
    throw Error(ErrorCode::BracketInvalid, "speed bracket must satisfy 0 <= lo < hi");
  }
  SpeedSearch out;
  auto finish = [&](ShotResult shot) {
    out.V = shot.V;
    out.profile = build_profile(wp, shot.V, opt);
    if (!out.profile.monotone()) {
      throw Error(ErrorCode::NonConvergence, "computed profile is not monotone");
    }
    out.shot = std::move(shot);
    return out;
  };

  ShotResult slo = shoot(wp, lo, opt);
  if (slo.outcome == ShotOutcome::Connected) return finish(std::move(slo));
  if (slo.outcome != ShotOutcome::FellBack) {
    throw Error(ErrorCode::BracketInvalid, "lower speed does not fall back");
  }
  ShotResult shi = shoot(wp, hi, opt);
  for (int d = 0; shi.outcome == ShotOutcome::FellBack && d < 8; ++d) {
    lo = hi;
    slo = std::move(shi);
    hi *= 2.0;
    shi = shoot(wp, hi, opt);
  }
  if (shi.outcome == ShotOutcome::Connected) return finish(std::move(shi));
  if (shi.outcome != ShotOutcome::Overshot) {
    throw Error(ErrorCode::BracketInvalid, "no overshooting speed found");
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  while (hi - lo > tol_V && out.iterations < 200) {
    ++out.iterations;
    const double mid = 0.5 * (lo + hi);
    ShotResult s = shoot(wp, mid, opt);
    if (s.outcome == ShotOutcome::Connected) return finish(std::move(s));
    if (s.outcome == ShotOutcome::FellBack) {
      lo = mid;
      slo = std::move(s);
    } else {
      hi = mid;
      shi = std::move(s);
    }
  }
  return finish(slo.closest <= shi.closest ? std::move(slo) : std::move(shi));
}

EnergyCheck energy_residual(const WaveProblem& wp, const Trajectory& path, double V) {
  EnergyCheck out;
  const std::size_t n = path.size();
  if (n == 0) return out;
  std::vector<double> e(n), z2(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = path.states[k](0), z = path.states[k](1);
    e[k] = wp.G(z) + wp.F(w);
    z2[k] = z * z;
    out.max_drift = std::max(out.max_drift, std::abs(e[k] - e[0]));
  }
  out.total_increase = e[n - 1] - e[0];
  auto uniform = [&](std::size_t k) {
    const double h = path.times[k + 1] - path.times[k];
    for (std::size_t j = k + 1; j < k + 4; ++j) {
      if (std::abs(path.times[j + 1] - path.times[j] - h) > 1e-9 * h) return false;
    }
    return true;
  };
  auto boole = [&](std::size_t k) {
    const double h = path.times[k + 1] - path.times[k];
    return V * 2.0 * h / 45.0 * (7.0 * z2[k] + 32.0 * z2[k + 1] + 12.0 * z2[k + 2] + 32.0 * z2[k + 3] + 7.0 * z2[k + 4]);
  };
  for (std::size_t k = 0; k + 4 < n; ++k) {
    if (!uniform(k)) continue;
    const double h = path.times[k + 1] - path.times[k];
    out.max_residual = std::max(out.max_residual, std::abs(e[k + 4] - e[k] - boole(k)) / (4.0 * h));
  }
  std::size_t k = 0;
  for (; k + 4 < n && uniform(k); k += 4) out.dissipated += boole(k);
  for (; k + 1 < n; ++k) {
    out.dissipated += V * 0.5 * (path.times[k + 1] - path.times[k]) * (z2[k] + z2[k + 1]);
  }
  return out;
}

SquareMatrix divergence_operator(const WaveGrid& grid, const std::vector<double>& k,
                                 const std::vector<double>& q, double V) {
  const int n = grid.N;
  if (n < 2 || static_cast<int>(k.size()) != n + 1 || static_cast<int>(q.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "divergence_operator: coefficient sizes do not match the grid");
  }
  const double h = grid.h(), h2 = h * h;
  Matrix a = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    a(j, j) = (k[j] + k[j + 1]) / h2 + q[j];
    if (j + 1 < n) a(j, j + 1) = -k[j + 1] / h2 + V / (2.0 * h);
    if (j > 0) a(j, j - 1) = -k[j] / h2 - V / (2.0 * h);
  }
  return SquareMatrix(std::move(a));
}

SquareMatrix discretize_linearization(const WaveProblem& wp, const WaveGrid& grid,
                                      const std::vector<double>& w_nodes, double V) {
  const int n = grid.N;
  if (static_cast<int>(w_nodes.size()) != n + 2) {
    throw Error(ErrorCode::InvalidArgument, "front samples must include both boundary nodes");
  }
  const double h = grid.h();
  std::vector<double> k(n + 1), q(n);
  for (int i = 0; i <= n; ++i) k[i] = wp.flux.dsigma((w_nodes[i + 1] - w_nodes[i]) / h);
  for (int j = 0; j < n; ++j) q[j] = -wp.df(w_nodes[j + 1]);
  return divergence_operator(grid, k, q, V);
}

SquareMatrix discretize_linearization(const WaveProblem& wp, const WaveProfile& profile,
                                      const WaveGrid& grid) {
  const auto left = profile.at(-grid.L);
  const auto right = profile.at(grid.L);
  const double tail = std::max({left[0], 1.0 - right[0], std::abs(left[1]), std::abs(right[1])});
  if (tail > kTailTolerance) {
    throw Error(ErrorCode::TailsTooFat, "front tails at +-L exceed " + std::to_string(kTailTolerance) +
                                            " (max " + std::to_string(tail) + "); increase L");
  }
  std::vector<double> w(grid.N + 2);
  for (int i = 0; i < grid.N + 2; ++i) w[i] = profile.w(grid.s(i));
  return discretize_linearization(wp, grid, w, profile.V());
}

Vector sampled_derivative(const WaveProfile& profile, const WaveGrid& grid) {
  Vector d(grid.N);
  for (int j = 0; j < grid.N; ++j) d(j) = profile.dw(grid.s(j + 1));
  return d;
}

WaveSpectrumReport wave_spectrum(const SquareMatrix& A, const WaveGrid& grid, const Vector& w_prime,
                                 double a, double eps_spec) {
  if (A.n() != grid.N || w_prime.size() != grid.N) {
    throw Error(ErrorCode::InvalidArgument, "wave_spectrum: sizes do not match the grid");
  }
  const EigenPairs ep = eigen_pairs(A);
  WaveSpectrumReport rep;
  rep.L = grid.L;
  rep.N = grid.N;
  const Eigen::Index n = ep.values.size();
  rep.eigenvalues.assign(ep.values.data(), ep.values.data() + n);
  rep.localized.resize(n);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(ep.values(i)) < best) {
      best = std::abs(ep.values(i));
      rep.zero_index = static_cast<std::size_t>(i);
    }
    double inner = 0.0, total = 0.0;
    for (int j = 0; j < grid.N; ++j) {
      const double m = std::norm(ep.vectors(j, i));
      total += m;
      if (std::abs(grid.s(j + 1)) <= 0.5 * grid.L) inner += m;
    }
    rep.localized[i] = inner >= 0.9 * total;
  }
  rep.zero_mode_gap = best;
  const Eigen::VectorXcd v0 = ep.vectors.col(static_cast<Eigen::Index>(rep.zero_index));
  rep.zero_mode_correlation =
      std::abs(v0.dot(w_prime.cast<Complex>())) / (v0.norm() * w_prime.norm());
  rep.stable_margin = std::numeric_limits<double>::infinity();
  rep.essential_min_re = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<std::size_t>(i) == rep.zero_index) continue;
    rep.stable_margin = std::min(rep.stable_margin, ep.values(i).real());
    if (!rep.localized[i]) rep.essential_min_re = std::min(rep.essential_min_re, ep.values(i).real());
  }
  rep.essential_bound_ok = rep.essential_min_re >= a - eps_spec;
  return rep;
}

Vector mol_rhs(const WaveProblem& wp, const WaveGrid& grid, const Vector& u, double V) {
  const int n = grid.N;
  const double h = grid.h();
  Vector out(n);
  double flux_left = wp.flux.sigma((u(1) - u(0)) / h);
  for (int i = 1; i <= n; ++i) {
    const double flux_right = wp.flux.sigma((u(i + 1) - u(i)) / h);
    out(i - 1) = (flux_right - flux_left) / h - V * (u(i + 1) - u(i - 1)) / (2.0 * h) + wp.f(u(i));
    flux_left = flux_right;
  }
  return out;
}

DiscreteFront discrete_front(const WaveProblem& wp, const WaveGrid& grid, const Vector& guess,
                             double V_guess, const Vector& slope) {
  const int n = grid.N;
  if (guess.size() != n + 2 || slope.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "discrete_front: sizes do not match the grid");
  }
  const double h = grid.h(), h2 = h * h;
  DiscreteFront out;
  out.u = guess;
  out.V = V_guess;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < 30; ++it) {
    const Vector r = mol_rhs(wp, grid, out.u, out.V);
    const double phase = (out.u.segment(1, n) - guess.segment(1, n)).dot(slope);
    out.residual = r.cwiseAbs().maxCoeff();
    if (out.residual <= 1e-13 && std::abs(phase) <= 1e-13) break;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n + 2);
    for (int i = 1; i <= n; ++i) {
      const double kr = wp.flux.dsigma((out.u(i + 1) - out.u(i)) / h);
      const double kl = wp.flux.dsigma((out.u(i) - out.u(i - 1)) / h);
      const int row = i - 1;
      trip.emplace_back(row, row, -(kr + kl) / h2 + wp.df(out.u(i)));
      if (i < n) trip.emplace_back(row, row + 1, kr / h2 - out.V / (2.0 * h));
      if (i > 1) trip.emplace_back(row, row - 1, kl / h2 + out.V / (2.0 * h));
      trip.emplace_back(row, n, -(out.u(i + 1) - out.u(i - 1)) / (2.0 * h));
      trip.emplace_back(n, row, slope(row));
    }
    Eigen::SparseMatrix<double> jac(n + 1, n + 1);
    jac.setFromTriplets(trip.begin(), trip.end());
    lu.compute(jac);
    if (lu.info() != Eigen::Success) {
      throw Error(ErrorCode::IllConditioned, "discrete front Jacobian is singular");
    }
    Vector rhs(n + 1);
    rhs.head(n) = -r;
    rhs(n) = -phase;
    const Vector step = lu.solve(rhs);
    if (!step.allFinite()) throw Error(ErrorCode::NewtonDiverged, "discrete front Newton step failed");
    out.u.segment(1, n) += step.head(n);
    out.V += step(n);
    out.iterations = it + 1;
    if (step.cwiseAbs().maxCoeff() <= 1e-15) {
      out.residual = mol_rhs(wp, grid, out.u, out.V).cwiseAbs().maxCoeff();
      break;
    }
  }
  if (!(out.residual <= 1e-9)) {
    throw Error(ErrorCode::NewtonDiverged,
                "discrete front did not converge (residual " + std::to_string(out.residual) + ")");
  }
  return out;
}

namespace {

// Left null vector of the front Jacobian by inverse iteration on its transpose.
Vector adjoint_zero_mode(const WaveProblem& wp, const WaveGrid& grid, const DiscreteFront& front,
                         const Vector& start) {
  const int n = grid.N;
  const double h = grid.h(), h2 = h * h;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 1; i <= n; ++i) {
    const double kr = wp.flux.dsigma((front.u(i + 1) - front.u(i)) / h);
    const double kl = wp.flux.dsigma((front.u(i) - front.u(i - 1)) / h);
    const int row = i - 1;
    trip.emplace_back(row, row, -(kr + kl) / h2 + wp.df(front.u(i)));
    if (i < n) trip.emplace_back(row + 1, row, kr / h2 - front.V / (2.0 * h));
    if (i > 1) trip.emplace_back(row - 1, row, kl / h2 + front.V / (2.0 * h));
  }
  Eigen::SparseMatrix<double> jt(n, n);
  jt.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(jt);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::IllConditioned, "front Jacobian is singular");
  Vector psi = start.normalized();
  for (int it = 0; it < 4; ++it) psi = Vector(lu.solve(psi)).normalized();
  if (psi.dot(start) < 0.0) psi = -psi;
  return psi;
}

}  // namespace

double fit_translate(const WaveProfile& profile, const WaveGrid& grid, const Vector& v) {
  const int n = grid.N;
  Vector w0(n), wp(n);
  for (int j = 0; j < n; ++j) {
    const auto a = profile.at(grid.s(j + 1));
    w0(j) = a[0];
    wp(j) = a[1];
  }
  double alpha = v.dot(wp) / wp.squaredNorm();
  for (int it = 0; it < 50; ++it) {
    Vector r(n), d(n);
    for (int j = 0; j < n; ++j) {
      const auto a = profile.at(grid.s(j + 1) + alpha);
      r(j) = v(j) - (a[0] - w0(j));
      d(j) = a[1];
    }
    const double step = d.dot(r) / d.squaredNorm();
    alpha += step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(alpha))) break;
  }
  return alpha;
}

namespace {

double translate_residual(const WaveProfile& profile, const WaveGrid& grid, const Vector& v,
                          double alpha) {
  double worst = 0.0;
  for (int j = 0; j < grid.N; ++j) {
    const double s = grid.s(j + 1);
    worst = std::max(worst, std::abs(v(j) - (profile.w(s + alpha) - profile.w(s))));
  }
  return worst;
}

}  // namespace

WaveSimulation simulate_perturbation(const WaveProblem& wp, const WaveProfile& profile,
                                     const WaveGrid& grid, const PerturbationSpec& spec,
                                     double t_max, double rho, double blow_up) {
  const int n = grid.N;
  Vector w_nodes(n + 2);
  for (int i = 0; i < n + 2; ++i) w_nodes(i) = profile.w(grid.s(i));
  const Vector slope = sampled_derivative(profile, grid);
  const DiscreteFront front = discrete_front(wp, grid, w_nodes, profile.V(), slope);

  Vector v0(n);
  for (int j = 0; j < n; ++j) {
    const double s = grid.s(j + 1);
    if (spec.shift != 0.0) {
      v0(j) = profile.w(s + spec.shift) - profile.w(s);
    } else {
      const double x = (s - spec.center) / spec.width;
      v0(j) = spec.amplitude * std::exp(-0.5 * x * x);
    }
  }

  VectorFieldSpec fs;
  fs.n = n;
  fs.center = Vector::Zero(n);
  fs.name = "moving-frame";
  const double V_h = front.V;
  fs.rhs = [&](const Vector& v) {
    Vector u = front.u;
    u.segment(1, n) += v;
    return mol_rhs(wp, grid, u, V_h);
  };

  IntegratorOptions io;
  io.rtol = io.atol = 1e-12;
  io.sample_dt = t_max / 200.0;
  bool blew_up = false;
  io.stop = [&](double, const Vector& v) {
    blew_up = !(v.cwiseAbs().maxCoeff() <= blow_up);
    return blew_up;
  };
  const Trajectory traj = integrate(fs, v0, t_max, io);
  if (blew_up) throw Error(ErrorCode::BlowUp, "perturbation exceeded the sup-norm guard");

  WaveSimulation out;
  out.V_h = V_h;
  ConvergenceReport& rep = out.report;
  rep.rho = rho;
  rep.delta = v0.cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector& v = traj.states[k];
    out.times.push_back(traj.times[k]);
    out.sup_norm.push_back(v.cwiseAbs().maxCoeff());
    const double alpha = fit_translate(profile, grid, v);
    const double res = translate_residual(profile, grid, v, alpha);
    out.manifold_residual.push_back(res);
    rep.dist_series.push_back(res);
    if (res > rho && rep.outcome != Outcome::LeftNeighborhood) {
      rep.outcome = Outcome::LeftNeighborhood;
      rep.t_exit = traj.times[k];
    }
  }
  const Vector& v_end = traj.back();
  out.alpha_hat = fit_translate(profile, grid, v_end);
  out.residual = translate_residual(profile, grid, v_end, out.alpha_hat);
  if (rep.outcome == Outcome::LeftNeighborhood) return out;

  Vector guess = front.u;
  guess.segment(1, n) += v_end;
  const Vector psi = adjoint_zero_mode(wp, grid, front, slope);
  const DiscreteFront limit = discrete_front(wp, grid, guess, V_h, psi);
  rep.u_inf = limit.u.segment(1, n) - front.u.segment(1, n);
  out.front_residual = mol_rhs(wp, grid, limit.u, V_h).cwiseAbs().maxCoeff();
  const ConvergenceOptions copt;
  if (!(out.front_residual <= copt.eps_eq)) {
    rep.note = "limit candidate is not a steady state of the discrete system";
    return out;
  }
  std::vector<double>& d = out.limit_distance;
  for (const Vector& v : traj.states) d.push_back((v - rep.u_inf).cwiseAbs().maxCoeff());
  const double floor = copt.noise_floor * (1.0 + front.u.cwiseAbs().maxCoeff());
  if (std::all_of(d.begin(), d.end(), [&](double x) { return x <= copt.stationary_tol; })) {
    rep.outcome = Outcome::Converged;
    rep.fit_r2 = 1.0;
    rep.note = "stationary at an equilibrium";
    return out;
  }
  const RateFit fit = fit_exponential_rate(traj.times, d, copt, floor);
  rep.rate = fit.rate;
  rep.fit_r2 = fit.r2;
  if (fit.valid && fit.rate > 0.0 && fit.r2 >= copt.min_r2) {
    rep.outcome = Outcome::Converged;
  } else {
    rep.note = "no exponential decay detected";
  }
  return out;
}

}  // namespace normstab
