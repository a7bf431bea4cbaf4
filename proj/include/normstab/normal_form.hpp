#pragma once

// Linearization and classification of an equilibrium lying on a manifold of
// equilibria, the graph map over the center subspace, and the normal-form
// coordinates in which the equilibrium set becomes {y = 0, z = 0}.
//
// Sign convention: the state equation u' = F(u) is written around u_* as
// v' + A0 v = G(v) with A0 = -F'(u_*) and G(v) = F(u_* + v) + A0 v, so the
// "stable" part of the spectrum has positive real part.

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "normstab/spectral.hpp"

namespace normstab {

using Field = std::function<Vector(const Vector&)>;
using FieldJacobian = std::function<Matrix(const Vector&)>;

/// Autonomous vector field u' = F(u) on a subset of R^n.
struct VectorFieldSpec {
  int n = 0;
  Field rhs;
  FieldJacobian jacobian;  ///< optional exact Jacobian
  /// Optional domain test; when empty the domain is the ball of radius
  /// `domain_radius` around `center`.
  std::function<bool(const Vector&)> in_domain;
  Vector center;
  double domain_radius = std::numeric_limits<double>::infinity();
  std::string name;

  Vector operator()(const Vector& u) const { return rhs(u); }
  bool contains(const Vector& u) const;
  /// Exact Jacobian when supplied, central differences otherwise.
  Matrix jacobian_at(const Vector& u) const;
};

/// Central-difference Jacobian with per-column step cbrt(eps) * (1 + ||u||).
Matrix fd_jacobian(const Field& f, const Vector& u);

/// Chart Psi: U subset R^m -> R^n of the equilibrium manifold, Psi(0) = u_*.
struct ManifoldChart {
  int m = 0;
  Field psi;
  double chart_radius = 1.0;

  Vector at(const Vector& zeta) const { return psi(zeta); }
  Vector base_point() const { return psi(Vector::Zero(m)); }
  /// n x m central-difference derivative at zeta.
  Matrix derivative(const Vector& zeta) const;
};

struct ClassifyTolerances {
  SpectralTolerances spectral{};
  double eps_eq = 1e-9;        ///< equilibrium residual accepted on the chart
  double tangent_tol = 1e-6;   ///< max principal angle between T(E) and N(A0)
  double rank_tol = 1e-8;      ///< relative singular-value threshold for rank Psi'(0)
};

/// A0 = -dF/du at u_star. Throws Error(NotAnEquilibrium) if ||F(u_star)|| > eps_eq.
SquareMatrix linearize(const VectorFieldSpec& fs, const Vector& u_star, double eps_eq = 1e-9);

struct TangentCheck {
  bool contained = false;
  bool equal = false;
  std::vector<double> angles;  ///< principal angles of range(Psi'(0)) against N(A0)
  double max_angle = 0.0;
  int m = 0;
  int kernel_dim = 0;
};

/// Compares the chart's tangent space at 0 with the kernel of A0.
/// Throws Error(RankDeficientChart) if rank Psi'(0) < m.
TangentCheck tangent_kernel_check(const ManifoldChart& chart, const SquareMatrix& a0,
                                  double tol = 1e-6, double tol_zero = 1e-9,
                                  double rank_tol = 1e-8);

enum class Verdict { NormallyStable, NormallyHyperbolic, Inconclusive };

const char* to_string(Verdict v) noexcept;

struct ConditionFailure {
  std::string label;  ///< "(i)" .. "(iv)"
  std::string diagnostic;
};

struct Classification {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<ConditionFailure> failed;
  int mc = 0, ms = 0, mu = 0;
  Vector u_star;
  Matrix a0;
  SpectrumReport spectrum;
  SemisimpleReport semisimple;
  TangentCheck tangent;
  double equilibrium_residual = 0.0;

  bool failed_condition(const std::string& label) const;
  std::vector<std::string> failed_labels() const;
};

/// Runs linearize, eigen_decompose, semisimple_zero and tangent_kernel_check
/// and combines them into a verdict. Sub-operation failures are folded into
/// Inconclusive with a diagnostic rather than thrown.
Classification classify(const VectorFieldSpec& fs, const ManifoldChart& chart,
                        const ClassifyTolerances& tol = {});

struct GraphMapOptions {
  double eps_newton = 1e-11;
  int max_iterations = 50;
  double min_radius_fraction = 1e-6;  ///< give up shrinking rho0 below this fraction
};

/// phi = (phi_s, phi_u): B(0, rho0) in range(Pc) -> range(Ps) + range(Pu),
/// the graph over the center subspace that carries all equilibria near u_*.
/// Values are solved on demand by damped Newton on
///   P^{su} F(u_* + x + z) = 0,  z in range(P^{su}),
/// which is the same equation as A_su z = P^{su} G(x + z).
class GraphMap {
 public:
  struct Value {
    Vector phi_s;
    Vector phi_u;
    double residual = 0.0;
    int iterations = 0;
  };

  GraphMap(VectorFieldSpec fs, Vector u_star, SpectralSplit split, SquareMatrix a0, double rho0,
           GraphMapOptions options = {});

  double rho0() const noexcept { return rho0_; }
  const SpectralSplit& split() const noexcept { return split_; }
  const Vector& u_star() const noexcept { return u_star_; }
  const Matrix& a0() const noexcept { return a0_; }
  const VectorFieldSpec& field() const noexcept { return fs_; }

  /// x is a full n-vector in range(Pc) with ||x|| <= rho0.
  /// Throws Error(OutOfChart) or Error(NewtonDiverged).
  Value evaluate(const Vector& x) const;
  Vector phi(const Vector& x) const;
  /// phi'(x) h split into its stable and unstable parts, h in range(Pc).
  std::pair<Vector, Vector> derivative_apply(const Vector& x, const Vector& h) const;
  /// Operator 2-norm of phi'(x) restricted to range(Pc).
  double derivative_norm(const Vector& x) const;

  /// G(v) = F(u_* + v) + A0 v.
  Vector nonlinearity(const Vector& v) const;

 private:
  Value solve(const Vector& x) const;
  Matrix implicit_derivative(const Vector& x, const Value& v) const;  // m_su x m_c

  struct Cache;

  VectorFieldSpec fs_;
  Vector u_star_;
  SpectralSplit split_;
  Matrix a0_;
  Matrix basis_su_;
  Matrix coords_su_;
  double rho0_;
  GraphMapOptions options_;
  std::shared_ptr<Cache> cache_;
};

/// Builds the graph map, shrinking rho0 by halving until ||phi'|| <= 1 and
/// Newton converges on a test mesh. Throws Error(RadiusTooLarge) if no
/// admissible radius is found.
GraphMap solve_graph_map(const VectorFieldSpec& fs, const Vector& u_star,
                         const SpectralSplit& split, double rho0, GraphMapOptions options = {});

/// Normal-form coordinates, all as full n-vectors.
struct NormalCoords {
  Vector x;  ///< P^c v
  Vector y;  ///< P^s v - phi_s(x)
  Vector z;  ///< P^u v - phi_u(x)
};

/// v is the deviation u - u_*. Throws Error(OutOfChart) if ||P^c v|| > rho0.
NormalCoords to_normal_form(const Vector& v, const GraphMap& gm);
/// Inverse: x + phi(x) + y + z.
Vector from_normal_form(const NormalCoords& c, const GraphMap& gm);

struct NormalFormRhs {
  Vector T;
  Vector R_s;
  Vector R_u;
};

/// T(x, y, z) = P^c (G(x + phi(x) + y + z) - G(x + phi(x))) and
/// R_l = P^l (...) - phi_l'(x) T for l in {s, u}.
NormalFormRhs normal_form_rhs(const NormalCoords& c, const GraphMap& gm);

}  // namespace normstab
