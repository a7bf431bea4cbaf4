#pragma once

// Traveling fronts of the quasilinear bistable equation
//   u_t - (sigma(u_x))_x = f(u),   f(u) = u(1 - u)(u - a),
// found by phase-plane shooting, and the spectrum and nonlinear stability of
// the front in the moving frame.

#include <array>
#include <string>
#include <vector>

#include "normstab/ode.hpp"

namespace normstab {

/// Diffusion flux. Kinds: "identity" (sigma = r), "linear" (sigma = k r,
/// params {k}), "tanh" (sigma = r + b tanh r, params {b}, b > -1).
class Flux {
 public:
  Flux() = default;
  Flux(std::string kind, std::vector<double> params = {});

  double sigma(double r) const;
  double dsigma(double r) const;
  /// Bounds 0 < c1 <= sigma' <= c2 over the real line.
  double c1() const;
  double c2() const;
  const std::string& kind() const noexcept { return kind_; }
  const std::vector<double>& params() const noexcept { return params_; }

 private:
  std::string kind_ = "identity";
  std::vector<double> params_;
};

struct WaveProblem {
  double a = 0.25;
  Flux flux;

  WaveProblem() = default;
  /// Throws Error(InvalidArgument) unless 0 < a < 1/2.
  WaveProblem(double a, Flux flux);

  double f(double u) const { return u * (1.0 - u) * (u - a); }
  double df(double u) const;
  /// F(y) = int_0^y f.
  double F(double y) const;
  /// G(y) = int_0^y sigma'(r) r dr (adaptive Gauss-Kronrod).
  double G(double y) const;
};

struct PhaseField {
  VectorFieldSpec field;  ///< (w, z)' = (z, (V z - f(w)) / sigma'(z))
  Matrix H0, H1;          ///< Jacobians at (0, 0) and (1, 0)
  double lambda1 = 0.0;   ///< unstable eigenvalue at (0, 0)
  double lambda2 = 0.0;
  double mu = 0.0;        ///< stable eigenvalue at (1, 0)
};

/// Throws Error(InvalidArgument) if V < 0.
PhaseField phase_field(const WaveProblem& wp, double V);

enum class ShotOutcome { FellBack, Overshot, Connected };

const char* to_string(ShotOutcome o) noexcept;

struct ShootOptions {
  double eps_launch = 1e-6;
  double eps_connect = 1e-4;  ///< radius of the target ball around (1, 0)
  double tol = 1e-12;
  double max_step = 0.25;
  double sample_ds = 0.02;
  double s_max = 4000.0;
};

struct ShotResult {
  ShotOutcome outcome = ShotOutcome::FellBack;
  double V = 0.0;
  Trajectory path;          ///< s -> (w, z), uniformly sampled
  double closest = 0.0;     ///< min distance of the path to (1, 0)
  std::size_t closest_index = 0;
};

/// Integrates from eps_launch along the unstable direction of (0, 0).
/// Throws Error(Inconclusive) if none of the three events happens by s_max.
ShotResult shoot(const WaveProblem& wp, double V, const ShootOptions& options = {});

/// Monotone heteroclinic profile, continued by exponential tails and shifted
/// so that w(0) = 1/2.
class WaveProfile {
 public:
  WaveProfile() = default;
  /// Samples (s, w, w') with s increasing; the first and last samples must
  /// lie on the unstable direction of (0, 0) and the stable direction of (1, 0).
  WaveProfile(const WaveProblem& wp, double V, std::vector<double> s, std::vector<double> w,
              std::vector<double> z);

  /// (w, w', w'') at s.
  std::array<double, 3> at(double s) const;
  double w(double s) const { return at(s)[0]; }
  double dw(double s) const { return at(s)[1]; }

  double V() const noexcept { return V_; }
  double join_mismatch = 0.0;  ///< |z_forward - z_backward| at w = 1/2

  double s_first() const { return s_.front(); }
  double s_last() const { return s_.back(); }
  const std::vector<double>& s() const noexcept { return s_; }
  const std::vector<double>& w_samples() const noexcept { return w_; }
  const std::vector<double>& z_samples() const noexcept { return z_; }
  double lambda1() const noexcept { return lambda1_; }
  double mu() const noexcept { return mu_; }

  /// w' > 0 on the samples and tails; w -> 0 on the left and -> 1 on the right.
  bool monotone() const;

 private:
  double V_ = 0.0;
  double lambda1_ = 0.0, mu_ = 0.0;
  std::vector<double> s_, w_, z_, zp_;
};

/// Forward branch of the unstable manifold of (0, 0) up to w = 1/2 joined
/// with the backward branch of the stable manifold of (1, 0) down to w = 1/2.
WaveProfile build_profile(const WaveProblem& wp, double V, const ShootOptions& options = {});

struct SpeedSearch {
  double V = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int iterations = 0;
  ShotResult shot;  ///< the shooting path closest to (1, 0)
  WaveProfile profile;
};

/// Bisection on V. If shoot(hi) does not overshoot, hi is doubled (up to
/// 2^8 times). Throws Error(BracketInvalid) if lo does not fall back or no
/// overshooting hi is found.
SpeedSearch find_speed(const WaveProblem& wp, double lo = 0.0, double hi = 2.0,
                       double tol_V = 1e-12, const ShootOptions& options = {});

struct EnergyCheck {
  double max_residual = 0.0;   ///< max |d/ds (G(z) + F(w)) - V z^2|
  double max_drift = 0.0;      ///< max |E(s) - E(s_0)|, E = G(z) + F(w)
  double total_increase = 0.0; ///< E(end) - E(start)
  double dissipated = 0.0;     ///< int V z^2 ds along the path
};

/// d/ds over windows of four uniform sample intervals, integrals by Boole's rule.
EnergyCheck energy_residual(const WaveProblem& wp, const Trajectory& path, double V);

struct WaveGrid {
  double L = 40.0;
  int N = 2000;  ///< interior points
  double h() const { return 2.0 * L / (N + 1); }
  double s(int i) const { return -L + i * h(); }  ///< i = 0 .. N + 1
};

/// Tridiagonal operator
///   (A v)_i = -(k_{i+1/2}(v_{i+1} - v_i) - k_{i-1/2}(v_i - v_{i-1})) / h^2
///             + V (v_{i+1} - v_{i-1}) / (2h) + q_i v_i
/// with homogeneous Dirichlet closure. k has N + 1 entries, q has N.
SquareMatrix divergence_operator(const WaveGrid& grid, const std::vector<double>& k,
                                 const std::vector<double>& q, double V);

inline constexpr double kTailTolerance = 1e-8;

/// A0 v = -(sigma'(w_y) v_y)_y + V v_y - f'(w) v around the sampled front
/// `w_nodes` (N + 2 values including the boundary nodes), sigma' evaluated on
/// difference quotients at the half points.
SquareMatrix discretize_linearization(const WaveProblem& wp, const WaveGrid& grid,
                                      const std::vector<double>& w_nodes, double V);

/// Same operator around the profile. Throws Error(TailsTooFat) if
/// max(w(-L), 1 - w(L), |w'(+-L)|) > kTailTolerance.
SquareMatrix discretize_linearization(const WaveProblem& wp, const WaveProfile& profile,
                                      const WaveGrid& grid);

struct WaveSpectrumReport {
  double L = 0.0;
  int N = 0;
  std::vector<Complex> eigenvalues;
  std::vector<bool> localized;  ///< >= 90% of the eigenvector mass in |s| <= L/2
  std::size_t zero_index = 0;
  double zero_mode_gap = 0.0;
  double zero_mode_correlation = 0.0;
  double stable_margin = 0.0;
  double essential_min_re = 0.0;  ///< min Re over non-localized eigenvalues
  bool essential_bound_ok = false;
};

/// `w_prime` holds the interior samples of w'. `a` is the bistability
/// parameter that bounds the essential spectrum, checked with slack eps_spec.
WaveSpectrumReport wave_spectrum(const SquareMatrix& A, const WaveGrid& grid,
                                 const Vector& w_prime, double a, double eps_spec = 0.05);

/// Interior samples of w' on the grid.
Vector sampled_derivative(const WaveProfile& profile, const WaveGrid& grid);

struct DiscreteFront {
  Vector u;        ///< N + 2 nodal values, boundary nodes included
  double V = 0.0;  ///< discrete speed
  double residual = 0.0;
  int iterations = 0;
};

/// Steady state of the method-of-lines system with unknown speed, pinned by
/// sum (u - anchor) * anchor' = 0. Boundary nodes are taken from `guess`.
DiscreteFront discrete_front(const WaveProblem& wp, const WaveGrid& grid, const Vector& guess,
                             double V_guess, const Vector& anchor_slope);

/// u_t = (sigma(u_s))_s - V u_s + f(u) on the interior nodes.
Vector mol_rhs(const WaveProblem& wp, const WaveGrid& grid, const Vector& u_nodes, double V);

struct PerturbationSpec {
  double amplitude = 0.01;
  double center = 0.0;
  double width = 1.0;
  /// When nonzero, v0 = w(. + shift) - w instead of the Gaussian.
  double shift = 0.0;
};

struct WaveSimulation {
  ConvergenceReport report;
  double alpha_hat = 0.0;
  double residual = 0.0;        ///< sup |v(t_max) - (w(. + alpha_hat) - w)|
  double V_h = 0.0;             ///< speed of the discrete front
  double front_residual = 0.0;  ///< sup |R(u_inf)|
  std::vector<double> times;
  std::vector<double> sup_norm;      ///< sup |v(t)|
  std::vector<double> manifold_residual;  ///< sup |v(t) - (w(. + alpha(t)) - w)|
  std::vector<double> limit_distance;     ///< sup |v(t) - v_inf|
};

/// Method-of-lines integration of the moving-frame equation around the
/// discrete front, then a convergence assessment of v(t).
/// Throws Error(BlowUp) if sup |v| exceeds `blow_up`.
WaveSimulation simulate_perturbation(const WaveProblem& wp, const WaveProfile& profile,
                                     const WaveGrid& grid, const PerturbationSpec& v0,
                                     double t_max, double rho = 0.5, double blow_up = 10.0);

/// argmin_alpha || v - (w(. + alpha) - w) ||_2 on the interior nodes.
double fit_translate(const WaveProfile& profile, const WaveGrid& grid, const Vector& v);

}  // namespace normstab
