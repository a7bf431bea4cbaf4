#pragma once

// Linearized Mullins-Sekerka problem around a circle of radius R in a disk
// of radius R_out: Dirichlet-to-Neumann jumps per Fourier mode, the mode
// eigenvalues of L, the flat-interface symbol, and the chart of nearby circles.

#include <functional>
#include <vector>

#include "normstab/spectral.hpp"

namespace normstab {

struct MSConfig {
  double R = 1.0;
  double R_out = 20.0;
  int k_max = 6;
  int radial_grid = 4000;      ///< intervals per phase in s = ln r
  double inner_depth = 8.0;    ///< inner phase covers ln R - inner_depth <= s <= ln R
  double doubling_tol = 1e-3;  ///< relative change allowed when the grid is doubled
};

/// Throws Error(InvalidRadius) or Error(InvalidArgument) on inconsistent fields.
void validate(const MSConfig& cfg);

/// Eigenvalue (k^2 - 1) / R^2 of A_Sigma on the k-th circular harmonic.
double a_sigma_mode(int k, double R);

/// Jump of the normal derivative d_r v(outer) - d_r v(inner) at r = R of the
/// harmonic extension of cos(k theta) that is regular at 0 and has zero
/// flux at R_out. Throws Error(GridTooCoarse) if doubling the grid moves the
/// value by more than cfg.doubling_tol.
double dtn_jump_mode(int k, const MSConfig& cfg);

/// Same at a fixed grid without the doubling test.
double dtn_jump_mode_at(int k, const MSConfig& cfg, int intervals);

/// lambda_k = -dtn_jump_mode(k) * a_sigma_mode(k).
double l_mode_eigenvalue(int k, const MSConfig& cfg);

/// Whole-plane closed form 2k(k^2 - 1) / R^3.
double l_mode_reference(int k, double R);

struct ModeRow {
  int k = 0;
  double jump = 0.0;
  double lambda = 0.0;
  double reference = 0.0;
};

struct ModeEigenReport {
  std::vector<ModeRow> modes;
  int kernel_dim = 0;  ///< modes with |lambda| <= tol_zero, k >= 1 counted twice
  double tol_zero = 0.0;
};

ModeEigenReport mode_eigenvalues(const MSConfig& cfg, double tol_zero = 1e-6);

struct SymbolRow {
  double xi = 0.0;
  double jump = 0.0;
  double reference = 0.0;  ///< -2|xi|^3
  double rel_err = 0.0;
  double coarse_rel_err = 0.0;  ///< same at half the grid
};

struct SymbolCheck {
  std::vector<SymbolRow> rows;
  double max_rel_err = 0.0;
  double observed_order = 0.0;  ///< min over xi of log2(coarse / fine error)
};

/// Jump of w' across y = 0 for -w'' + xi^2 w = 0 on (-H, 0) and (0, H) with
/// w(0) = xi^2 and decay closure w' = -+|xi| w at +-H, on `intervals`
/// uniform steps per half. Throws Error(GridTooCoarse) if halving the grid
/// changes a jump by more than 1%.
SymbolCheck flat_symbol_check(const std::vector<double>& xi_list, double strip_height,
                              int intervals);

double flat_jump(double xi, double strip_height, int intervals);

/// rho(z) on the mesh theta_j, n = 2: Y_0 = 1, Y_1 = cos, Y_2 = sin.
/// Throws Error(InvalidRadius) if the radicand is not positive somewhere.
std::vector<double> sphere_chart(const Vector& z, double R, const std::vector<double>& theta);

/// Uniform mesh of `points` angles on [0, 2 pi).
std::vector<double> angle_mesh(int points);

/// Central-difference rho'(0) h on the mesh.
std::vector<double> sphere_chart_derivative(const Vector& h, double R,
                                            const std::vector<double>& theta);

struct MSTangentCheck {
  bool equal = false;
  int tangent_dim = 0;
  int kernel_dim = 0;
  double max_angle = 0.0;
};

/// Compares span{d rho / d z_j at 0} (plus `extra` directions) with the span
/// of the harmonics whose mode eigenvalue is numerically zero.
MSTangentCheck ms_tangent_kernel_check(
    const MSConfig& cfg, const std::vector<std::function<double(double)>>& extra = {},
    double tol = 1e-6, double tol_zero = 1e-6);

}  // namespace normstab
