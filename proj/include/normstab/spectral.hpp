#pragma once

// Dense real spectral toolkit: eigenvalues grouped around the imaginary
// axis, spectral projections from ordered real Schur forms, and the
// semi-simplicity test for the zero eigenvalue.

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace normstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// A finite real n x n operator (n >= 1). Construction validates shape and
/// finiteness so every downstream routine can rely on both.
class SquareMatrix {
 public:
  explicit SquareMatrix(Matrix entries);

  int n() const noexcept { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

struct SpectralTolerances {
  double tol_zero = 1e-9;  ///< |lambda| <= tol_zero counts as the zero eigenvalue
  double gap = 1e-6;       ///< |Re lambda| >= gap required outside the center
};

/// Group membership in the v' + A v convention: stable means Re > 0.
enum class SpectralGroup { Center, Stable, Unstable, Ambiguous };

const char* to_string(SpectralGroup group) noexcept;

struct SpectrumReport {
  std::vector<Complex> eigenvalues;  ///< repeated according to algebraic multiplicity
  std::vector<SpectralGroup> groups;
  double gap_margin = 0.0;  ///< min |Re lambda| over non-center eigenvalues (inf if none)
  bool inconclusive = false;
  SpectralTolerances tolerances;

  int count(SpectralGroup group) const;
  std::vector<Complex> values_in(SpectralGroup group) const;
};

/// All n eigenvalues of A, grouped as center / stable / unstable.
/// Throws Error(NonConvergence) if the QR iteration fails.
SpectrumReport eigen_decompose(const SquareMatrix& a, const SpectralTolerances& tol = {});

struct EigenPairs {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  ///< unit 2-norm right eigenvectors, one per column
};

/// Eigenvalues together with right eigenvectors.
EigenPairs eigen_pairs(const SquareMatrix& a);

/// Spectral projections and restricted operators for the center, stable and
/// unstable groups.
///
/// For each group g, `basis_g` has orthonormal columns spanning range(P_g) and
/// `coords_g` is the left map with coords_g * basis_g = I, so that
/// P_g = basis_g * coords_g. `restricted_g` is A on range(P_g) written in
/// `basis_g` (the leading block of the reordered real Schur form).
struct SpectralSplit {
  Matrix Pc, Ps, Pu;
  Matrix Ac, As, Au;
  Matrix basis_c, basis_s, basis_u;
  Matrix coords_c, coords_s, coords_u;
  int mc = 0, ms = 0, mu = 0;

  // Invariant residuals measured at construction.
  double idempotence_residual = 0.0;
  double completeness_residual = 0.0;
  double cross_residual = 0.0;
  double commutation_residual = 0.0;

  int n() const noexcept { return static_cast<int>(Pc.rows()); }

  /// Stable and unstable parts stacked: basis [basis_s basis_u], coords likewise.
  Matrix basis_su() const;
  Matrix coords_su() const;
  Matrix Psu() const { return Ps + Pu; }
};

/// Default tolerance for the projection invariants (relative to ||P||).
inline constexpr double kProjectionTolerance = 1e-8;

/// Projections via ordered real Schur form and a Sylvester decoupling.
/// Throws Error(Inconclusive) if the report is flagged, Error(IllConditioned)
/// if the groups cannot be separated reliably.
SpectralSplit spectral_projections(const SquareMatrix& a, const SpectrumReport& report,
                                   double eps_proj = kProjectionTolerance);

struct SemisimpleReport {
  bool semisimple = false;
  int kernel_dim = 0;
  Matrix kernel_basis;  ///< n x kernel_dim, orthonormal columns
  /// Distance of the rank decisions from the threshold, as the smallest ratio
  /// of (nearest singular value) / threshold or its inverse. Values close to 1
  /// mean the numerical rank is ambiguous.
  double margin = 0.0;
};

/// Numerical nullity of A and of A^2 (singular values below
/// tol_zero * sigma_max count as zero); zero is semi-simple iff they agree.
SemisimpleReport semisimple_zero(const SquareMatrix& a, double tol_zero = 1e-9);

/// Numerical nullity with the same relative threshold rule.
int numerical_nullity(const Matrix& a, double tol_rel);

/// Principal angles (radians, ascending) between range(a) and range(b).
/// Both inputs must have orthonormal columns.
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

/// Largest angle between each direction of range(a) and the subspace range(b);
/// zero iff range(a) is contained in range(b). Orthonormal columns expected.
double containment_angle(const Matrix& a, const Matrix& b);

/// Orthonormal basis of range(a) (numerical rank with relative threshold).
Matrix orthonormal_range(const Matrix& a, double tol_rel = 1e-10);

}  // namespace normstab
