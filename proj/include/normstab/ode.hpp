#pragma once

// Trajectory integration (Dormand-Prince 5(4) with dense output) and the
// diagnostics that decide whether a trajectory converged to a point of the
// equilibrium manifold or left a neighborhood of it.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "normstab/normal_form.hpp"

namespace normstab {

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double max_error_estimate = 0.0;  ///< scaled local error norm of accepted steps (<= 1)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  StepStats stats;
  bool stopped_by_predicate = false;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  const Vector& back() const { return states.back(); }
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;        ///< 0 selects automatically
  double max_step = 0.0;            ///< 0 means unbounded
  long max_steps = 5'000'000;
  /// When > 0, record samples on the uniform grid k * sample_dt (plus t_max)
  /// via dense output; otherwise record every accepted step.
  double sample_dt = 0.0;
  /// Evaluated after every accepted step; returning true ends integration
  /// with that step recorded.
  std::function<bool(double, const Vector&)> stop;
};

/// Adaptive explicit integration of u' = F(u) from u0 over [0, t_max].
/// Throws Error(StepSizeUnderflow) or Error(DomainExit).
Trajectory integrate(const VectorFieldSpec& fs, const Vector& u0, double t_max,
                     const IntegratorOptions& options);

/// Convenience overload with rtol = atol = tol.
Trajectory integrate(const VectorFieldSpec& fs, const Vector& u0, double t_max, double tol);

struct ManifoldDistance {
  double dist = 0.0;
  Vector zeta;
  bool refined = true;  ///< false when Gauss-Newton failed and the grid minimum is returned
};

/// Grid search over the chart domain followed by Gauss-Newton on
/// zeta -> ||u - Psi(zeta)||^2.
ManifoldDistance dist_to_manifold(const Vector& u, const ManifoldChart& chart,
                                  int grid_per_dim = 0);

enum class Outcome { Converged, LeftNeighborhood, Undetermined };

const char* to_string(Outcome o) noexcept;

struct ConvergenceOptions {
  double fit_fraction = 0.3;   ///< fit window = trailing fraction of samples
  int min_fit_samples = 20;
  double min_r2 = 0.98;
  double eps_eq = 1e-8;        ///< ||F(u_inf)|| bound for a converged limit
  /// Samples closer than this to u_inf (relative to 1 + ||u_inf||) are
  /// considered to be at the integration noise floor and not fitted.
  double noise_floor = 1e-11;
  /// A trajectory that never moves farther than this from u_inf is reported
  /// as converged without a rate fit.
  double stationary_tol = 1e-9;
};

struct ConvergenceReport {
  Outcome outcome = Outcome::Undetermined;
  Vector u_inf;
  double rate = 0.0;    ///< fitted exponential rate omega_hat
  double fit_r2 = 0.0;
  double t_exit = 0.0;  ///< first sample with dist > rho (LeftNeighborhood)
  double rho = 0.0;
  double delta = 0.0;   ///< ||u(0) - Psi(0)||
  std::vector<double> dist_series;
  std::string note;
};

struct RateFit {
  double rate = 0.0;
  double r2 = 0.0;
  int samples = 0;
  bool valid = false;
};

/// Least-squares fit of log(d) = c - rate * t over the trailing window, using
/// only samples with d > floor.
RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& d,
                             const ConvergenceOptions& options, double floor);

/// Newton from the last sample with steps in range(F'(u)), the directions
/// along which trajectories approach the manifold when 0 is semisimple.
Vector refine_limit(const VectorFieldSpec& fs, const Trajectory& traj);

/// The leave-or-converge decision for one trajectory.
ConvergenceReport assess_convergence(const Trajectory& traj, const VectorFieldSpec& fs,
                                     const ManifoldChart& chart, double rho,
                                     const ConvergenceOptions& options = {});

struct SimulationResult {
  Trajectory trajectory;
  ConvergenceReport report;
};

/// Integrates from u0 until t_max or until the first accepted step whose
/// distance to the manifold exceeds rho, then assesses convergence.
SimulationResult simulate(const VectorFieldSpec& fs, const ManifoldChart& chart, const Vector& u0,
                          double t_max, double rho, const IntegratorOptions& integrator,
                          const ConvergenceOptions& options = {});

/// omega_hat / min Re sigma(A_s). Throws Error(NoStablePart) if m_s = 0 and
/// Error(InvalidArgument) if the report did not converge.
double estimate_rate_vs_gap(const ConvergenceReport& report, const SpectralSplit& split);

}  // namespace normstab
