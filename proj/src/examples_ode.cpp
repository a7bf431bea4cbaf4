#include "normstab/examples_ode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "normstab/errors.hpp"

namespace normstab {

namespace {

constexpr double kOriginGuard = 1e-6;

double planar_radius(const Vector& u) { return std::hypot(u(0), u(1)); }

bool away_from_axis(const Vector& u) { return planar_radius(u) > kOriginGuard; }

}  // namespace

const char* to_string(ExampleKind kind) noexcept {
  switch (kind) {
    case ExampleKind::Ex1: return "Ex1";
    case ExampleKind::Ex2m1: return "Ex2m1";
    case ExampleKind::Ex2m2: return "Ex2m2";
  }
  return "?";
}

ManifoldChart circle_chart(int n) {
  ManifoldChart chart;
  chart.m = 1;
  chart.chart_radius = M_PI;
  chart.psi = [n](const Vector& zeta) {
    Vector u = Vector::Zero(n);
    u(0) = std::sin(zeta(0));
    u(1) = std::cos(zeta(0));
    return u;
  };
  return chart;
}

BuiltinProblem example_field(ExampleKind kind) {
  BuiltinProblem p;
  p.chart = circle_chart(2);
  VectorFieldSpec& fs = p.field;
  fs.n = 2;
  fs.center = Vector::Zero(2);
  fs.center(1) = 1.0;
  fs.in_domain = away_from_axis;
  fs.name = to_string(kind);

  if (kind == ExampleKind::Ex1) {
    fs.rhs = [](const Vector& u) {
      const double x = u(0), y = u(1), r = std::hypot(x, y);
      Vector f(2);
      f << (x + y) * (1.0 - r), (y - x) * (1.0 - r);
      return f;
    };
    fs.jacobian = [](const Vector& u) {
      const double x = u(0), y = u(1), r = std::hypot(x, y);
      Eigen::Vector2d grad(x / r, y / r), g(x + y, y - x);
      Matrix j(2, 2);
      j << 1.0, 1.0, -1.0, 1.0;
      j *= 1.0 - r;
      j -= g * grad.transpose();
      return j;
    };
    return p;
  }

  const int m = kind == ExampleKind::Ex2m1 ? 1 : 2;
  fs.rhs = [m](const Vector& u) {
    const double x = u(0), y = u(1), s = std::hypot(x, y) - 1.0;
    const double s3 = s * s * s, sm = std::pow(s, m);
    Vector f(2);
    f << -x * s3 - y * sm, -y * s3 + x * sm;
    return f;
  };
  fs.jacobian = [m](const Vector& u) {
    const double x = u(0), y = u(1), r = std::hypot(x, y), s = r - 1.0;
    Eigen::Vector2d grad(x / r, y / r), pos(x, y), rot(-y, x);
    Matrix rot_m(2, 2);
    rot_m << 0.0, -1.0, 1.0, 0.0;
    Matrix j = -s * s * s * Matrix::Identity(2, 2) - 3.0 * s * s * pos * grad.transpose() +
               std::pow(s, m) * rot_m + m * std::pow(s, m - 1) * rot * grad.transpose();
    return j;
  };
  return p;
}

BuiltinProblem hyperbolic_field() {
  BuiltinProblem p;
  p.chart = circle_chart(3);
  VectorFieldSpec& fs = p.field;
  fs.n = 3;
  fs.center = Vector::Zero(3);
  fs.center(1) = 1.0;
  fs.in_domain = away_from_axis;
  fs.name = "Hyperbolic3D";
  fs.rhs = [](const Vector& u) {
    const double x = u(0), y = u(1), s = std::hypot(x, y) - 1.0;
    Vector f(3);
    f << s * (x - y), s * (x + y), -u(2);
    return f;
  };
  fs.jacobian = [](const Vector& u) {
    const double x = u(0), y = u(1), r = std::hypot(x, y), s = r - 1.0;
    Matrix j = Matrix::Zero(3, 3);
    j(0, 0) = s + (x - y) * x / r;
    j(0, 1) = -s + (x - y) * y / r;
    j(1, 0) = s + (x + y) * x / r;
    j(1, 1) = s + (x + y) * y / r;
    j(2, 2) = -1.0;
    return j;
  };
  return p;
}

BuiltinProblem builtin_problem(const std::string& name) {
  if (name == "Ex1") return example_field(ExampleKind::Ex1);
  if (name == "Ex2m1") return example_field(ExampleKind::Ex2m1);
  if (name == "Ex2m2") return example_field(ExampleKind::Ex2m2);
  if (name == "Hyperbolic3D") return hyperbolic_field();
  throw Error(ErrorCode::ConfigError, "unknown builtin problem '" + name + "'");
}

double polar_relation(ExampleKind kind, double r) {
  switch (kind) {
    case ExampleKind::Ex1: return -std::log(r);
    case ExampleKind::Ex2m1: return std::log(std::abs(r - 1.0) / r) + 1.0 / (r - 1.0);
    case ExampleKind::Ex2m2: return -std::log(std::abs(r - 1.0) / r);
  }
  return 0.0;
}

std::vector<double> unwrapped_theta(const Trajectory& traj) {
  std::vector<double> theta;
  theta.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double raw = std::atan2(traj.states[k](1), traj.states[k](0));
    if (k == 0) {
      theta.push_back(raw);
      continue;
    }
    const double prev = theta.back();
    theta.push_back(prev + std::remainder(raw - prev, 2.0 * M_PI));
  }
  return theta;
}

PolarRelation polar_relation_residual(const Trajectory& traj, ExampleKind kind, double band) {
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  PolarRelation out;
  out.kind = kind;
  out.min_band_distance = std::numeric_limits<double>::infinity();
  std::vector<double> r(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    r[k] = planar_radius(traj.states[k]);
    if (r[k] <= kOriginGuard) throw Error(ErrorCode::SingularBand, "trajectory reached r = 0");
    out.min_band_distance = std::min(out.min_band_distance, std::abs(r[k] - 1.0));
  }
  if (kind != ExampleKind::Ex1 && out.min_band_distance < band) {
    throw Error(ErrorCode::SingularBand,
                "trajectory enters |r - 1| < " + std::to_string(band) + " where the relation is singular");
  }
  const std::vector<double> theta = unwrapped_theta(traj);
  double mean = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) mean += theta[k] - polar_relation(kind, r[k]);
  out.c0 = mean / static_cast<double>(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    out.residual =
        std::max(out.residual, std::abs(theta[k] - polar_relation(kind, r[k]) - out.c0));
  }
  out.theta_change = theta.back() - theta.front();
  return out;
}

double lyapunov_check(const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double v0 = std::pow(planar_radius(traj.states[k - 1]) - 1.0, 2);
    const double v1 = std::pow(planar_radius(traj.states[k]) - 1.0, 2);
    worst = std::max(worst, v1 - v0);
  }
  return worst;
}

std::vector<SweepStart> ex1_sweep_starts(int count, double delta, double phase) {
  if (count < 1 || !(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "sweep needs count >= 1 and delta > 0");
  std::vector<SweepStart> out;
  for (int k = 0; k < count; ++k) {
    const double phi = phase + 2.0 * M_PI * k / count;
    Vector u(2);
    u << delta * std::sin(phi), 1.0 + delta * std::cos(phi);
    out.push_back({u, false});
  }
  return out;
}

std::vector<SweepStart> hyperbolic_sweep_starts(int count, double delta, std::uint64_t seed,
                                                double min_radial_offset) {
  if (count < 1 || !(delta > 0.0) || !(min_radial_offset >= 0.0) || min_radial_offset >= 0.5 * delta)
    throw Error(ErrorCode::InvalidArgument, "sweep needs count >= 1 and 0 <= min_radial_offset < delta / 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<SweepStart> out;
  const int on_slice = count / 4;
  for (int k = 0; k < on_slice; ++k) {
    // chord <= arc, so |(zeta, w)| <= 0.9 delta keeps the point inside the ball
    const double phi = 2.0 * M_PI * (k + 0.5) / on_slice + 0.3 * unit(rng) / on_slice;
    const double len = 0.9 * delta * (0.5 + 0.5 * std::abs(unit(rng)));
    const double zeta = len * std::cos(phi), w = len * std::sin(phi);
    Vector u(3);
    u << std::sin(zeta), std::cos(zeta), w;
    out.push_back({u, true});
  }
  Vector base(3);
  base << 0.0, 1.0, 0.0;
  while (static_cast<int>(out.size()) < count) {
    Vector d(3);
    d << unit(rng), unit(rng), unit(rng);
    if (d.norm() > 1.0) continue;
    Vector u = base + delta * d;
    if (std::abs(planar_radius(u) - 1.0) < min_radial_offset) continue;
    out.push_back({u, false});
  }
  return out;
}

int sweep_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("NORMSTAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

std::vector<SweepRun> run_sweep(const BuiltinProblem& problem, const std::vector<SweepStart>& starts,
                                const SweepSettings& settings) {
  std::vector<SweepRun> out(starts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < starts.size();) {
      out[i].start = starts[i];
      try {
        SimulationResult r = simulate(problem.field, problem.chart, starts[i].u0, settings.t_max,
                                      settings.rho, settings.integrator, settings.convergence);
        out[i].report = std::move(r.report);
        out[i].steps = r.trajectory.stats.accepted;
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const int threads = std::min<int>(settings.threads > 0 ? settings.threads : sweep_threads(),
                                    static_cast<int>(std::max<std::size_t>(1, starts.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace normstab
