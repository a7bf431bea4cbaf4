#pragma once

// The planar examples with circles of equilibria and a three-dimensional
// normally hyperbolic companion, plus checks of their closed-form
// trajectory relations.

#include <cstdint>
#include <string>
#include <vector>

#include "normstab/ode.hpp"

namespace normstab {

enum class ExampleKind { Ex1, Ex2m1, Ex2m2 };

const char* to_string(ExampleKind kind) noexcept;

/// A field together with the chart of its equilibrium circle.
struct BuiltinProblem {
  VectorFieldSpec field;
  ManifoldChart chart;
  Vector u_star() const { return chart.base_point(); }
};

/// Unit circle in the first two coordinates of R^n, Psi(zeta) = (sin zeta, cos zeta, 0...).
ManifoldChart circle_chart(int n = 2);

/// Ex1:   x' = (x + y)(1 - r),            y' = (y - x)(1 - r)
/// Ex2m*: x' = -x(r - 1)^3 - y(r - 1)^m,  y' = -y(r - 1)^3 + x(r - 1)^m
/// on R^2 \ {0}, with exact Jacobians.
BuiltinProblem example_field(ExampleKind kind);

/// r' = r(r - 1), theta' = r - 1, w' = -w on (R^2 \ {0}) x R.
BuiltinProblem hyperbolic_field();

/// "Ex1", "Ex2m1", "Ex2m2" or "Hyperbolic3D". Throws Error(ConfigError) otherwise.
BuiltinProblem builtin_problem(const std::string& name);

struct PolarRelation {
  ExampleKind kind = ExampleKind::Ex1;
  double c0 = 0.0;
  double residual = 0.0;
  double theta_change = 0.0;  ///< unwrapped theta(end) - theta(start)
  double min_band_distance = 0.0;  ///< min |r - 1| along the path
};

/// Half-width of the excluded band around r = 1 for the Ex2 relations.
inline constexpr double kSingularBand = 0.02;

/// theta(r) along the trajectory (theta = atan2(y, x), unwrapped) against
/// Ex1:   theta = c0 - ln r
/// Ex2m1: theta = c0 + ln(|r - 1| / r) + 1 / (r - 1)
/// Ex2m2: theta = c0 - ln(|r - 1| / r)
/// Throws Error(SingularBand) if r gets within `band` of 1 (Ex2 kinds) or to 0.
PolarRelation polar_relation_residual(const Trajectory& traj, ExampleKind kind,
                                      double band = kSingularBand);

/// Relation value without the constant.
double polar_relation(ExampleKind kind, double r);

/// Unwrapped polar angle of each state.
std::vector<double> unwrapped_theta(const Trajectory& traj);

/// max_k V(u_{k+1}) - V(u_k) for V = (r - 1)^2, clamped below at 0.
double lyapunov_check(const Trajectory& traj);

struct SweepStart {
  Vector u0;
  bool on_stable_slice = false;
};

/// u_* + delta (sin phi_k, cos phi_k) with phi_k = phase + 2 pi k / count, u_* = (0, 1).
std::vector<SweepStart> ex1_sweep_starts(int count, double delta, double phase = 0.0);

/// Starts in the delta-ball around (0, 1, 0) of the three-dimensional field.
/// A quarter of them lie on the stable slice r = 1 with w != 0; the rest are
/// drawn uniformly from the ball, rejecting points with ||r - 1|| < min_radial_offset.
std::vector<SweepStart> hyperbolic_sweep_starts(int count, double delta, std::uint64_t seed,
                                                double min_radial_offset = 1e-3);

struct SweepSettings {
  double t_max = 12.0;
  double rho = 0.05;
  IntegratorOptions integrator{.rtol = 1e-12, .atol = 1e-12, .sample_dt = 0.05, .stop = {}};
  ConvergenceOptions convergence{};
  int threads = 0;  ///< 0 selects sweep_threads()
};

struct SweepRun {
  SweepStart start;
  ConvergenceReport report;
  long steps = 0;
  std::string error;  ///< set instead of `report` when the run threw
};

/// Runs simulate() for every start; results keep the order of `starts`.
std::vector<SweepRun> run_sweep(const BuiltinProblem& problem, const std::vector<SweepStart>& starts,
                                const SweepSettings& settings);

/// Hardware concurrency capped by NORMSTAB_THREADS when it is a positive integer.
int sweep_threads();

}  // namespace normstab
