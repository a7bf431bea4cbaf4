#include "normstab/mullins_sekerka.hpp"

#include <cmath>
#include <sstream>

#include "normstab/errors.hpp"

namespace normstab {

namespace {

// Thomas algorithm; sub[0] and sup[n-1] are ignored.
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                      std::vector<double> sup, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  return x;
}

// v'' = c v on [0, len] with v(0) = 1 and the closure alpha v(len) + beta v_s(len) = 0,
// M intervals. The closure uses the one-sided second-order stencil folded into the
// last interior equation. Returns the one-sided second-order v'(0).
double boundary_slope(double c, double len, int M, double alpha, double beta) {
  const double d = len / M, d2c = d * d * c;
  // Unknowns v_1 .. v_M.
  std::vector<double> sub(M, 1.0), diag(M, -(2.0 + d2c)), sup(M, 1.0), rhs(M, 0.0);
  rhs[0] = -1.0;
  // From (3v_M - 4v_{M-1} + v_{M-2}) / (2d) = v_s(len) and the equation at M - 1:
  // v_s(len) = ((2 - d2c) v_{M-1} - 2 v_M) / (2d) ... rearranged below.
  // alpha v_M + beta (2 v_M + (d2c - 2) v_{M-1}) / (2d) = 0
  diag[M - 1] = alpha + beta / d;
  sub[M - 1] = beta * (d2c - 2.0) / (2.0 * d);
  const std::vector<double> v = solve_tridiagonal(sub, diag, sup, rhs);
  return (-3.0 + 4.0 * v[0] - v[1]) / (2.0 * d);
}

}  // namespace

void validate(const MSConfig& cfg) {
  if (!(cfg.R > 0.0) || !std::isfinite(cfg.R)) throw Error(ErrorCode::InvalidRadius, "R must be positive");
  if (!(cfg.R_out > cfg.R) || !std::isfinite(cfg.R_out)) {
    throw Error(ErrorCode::InvalidRadius, "R_out must exceed R");
  }
  if (cfg.k_max < 2) throw Error(ErrorCode::InvalidArgument, "k_max must be at least 2");
  if (cfg.radial_grid < 8) throw Error(ErrorCode::InvalidArgument, "radial grid too small");
  if (!(cfg.inner_depth > 0.0)) throw Error(ErrorCode::InvalidArgument, "inner depth must be positive");
  if (!(cfg.doubling_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "doubling tolerance must be positive");
}

double a_sigma_mode(int k, double R) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "mode index must be nonnegative");
  if (!(R > 0.0)) throw Error(ErrorCode::InvalidRadius, "R must be positive");
  return (static_cast<double>(k) * k - 1.0) / (R * R);
}

double dtn_jump_mode_at(int k, const MSConfig& cfg, int intervals) {
  validate(cfg);
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "mode index must be nonnegative");
  const double k2 = static_cast<double>(k) * k;
  // In s = ln r the mode equation is v_ss = k^2 v. Inner phase: s runs from
  // ln R down to ln R - depth, with the regular-at-0 closure v_s = k v there.
  // Mirrored (sigma = ln R - s) this is v_sigma = -k v, i.e. k v + v_sigma = 0.
  const double inner = boundary_slope(k2, cfg.inner_depth, intervals, static_cast<double>(k), 1.0);
  // Outer phase: zero flux at ln R_out.
  const double outer = boundary_slope(k2, std::log(cfg.R_out / cfg.R), intervals, 0.0, 1.0);
  // inner is d/dsigma = -d/ds; d_r = d_s / R.
  return (outer + inner) / cfg.R;
}

double dtn_jump_mode(int k, const MSConfig& cfg) {
  const double coarse = dtn_jump_mode_at(k, cfg, cfg.radial_grid);
  const double fine = dtn_jump_mode_at(k, cfg, 2 * cfg.radial_grid);
  if (std::abs(fine - coarse) > cfg.doubling_tol * std::abs(fine) + 1e-8 / cfg.R) {
    std::ostringstream msg;
    msg << "mode " << k << ": grid doubling changes the jump from " << coarse << " to " << fine;
    throw Error(ErrorCode::GridTooCoarse, msg.str());
  }
  return fine;
}

double l_mode_eigenvalue(int k, const MSConfig& cfg) {
  return -dtn_jump_mode(k, cfg) * a_sigma_mode(k, cfg.R);
}

double l_mode_reference(int k, double R) {
  const double kk = k;
  return 2.0 * kk * (kk * kk - 1.0) / (R * R * R);
}

ModeEigenReport mode_eigenvalues(const MSConfig& cfg, double tol_zero) {
  validate(cfg);
  ModeEigenReport rep;
  rep.tol_zero = tol_zero;
  for (int k = 0; k <= cfg.k_max; ++k) {
    ModeRow row;
    row.k = k;
    row.jump = dtn_jump_mode(k, cfg);
    row.lambda = -row.jump * a_sigma_mode(k, cfg.R);
    row.reference = l_mode_reference(k, cfg.R);
    if (std::abs(row.lambda) <= tol_zero) rep.kernel_dim += k == 0 ? 1 : 2;
    rep.modes.push_back(row);
  }
  return rep;
}

double flat_jump(double xi, double H, int intervals) {
  if (xi == 0.0 || !std::isfinite(xi)) throw Error(ErrorCode::InvalidArgument, "xi must be nonzero");
  if (!(H > 0.0) || intervals < 4) throw Error(ErrorCode::InvalidArgument, "invalid strip discretization");
  const double ax = std::abs(xi), x2 = xi * xi;
  // Upper half: w(0) = xi^2, w' + |xi| w = 0 at H. The lower half is the
  // same problem in -y with closure w' - |xi| w = 0 at -H.
  const double upper = x2 * boundary_slope(x2, H, intervals, ax, 1.0);
  const double lower = -x2 * boundary_slope(x2, H, intervals, ax, 1.0);
  return upper - lower;
}

SymbolCheck flat_symbol_check(const std::vector<double>& xi_list, double H, int intervals) {
  if (xi_list.empty()) throw Error(ErrorCode::InvalidArgument, "empty xi list");
  SymbolCheck out;
  out.observed_order = std::numeric_limits<double>::infinity();
  for (double xi : xi_list) {
    SymbolRow row;
    row.xi = xi;
    row.jump = flat_jump(xi, H, intervals);
    const double coarse = flat_jump(xi, H, intervals / 2);
    row.reference = -2.0 * std::pow(std::abs(xi), 3);
    row.rel_err = std::abs(row.jump - row.reference) / std::abs(row.reference);
    row.coarse_rel_err = std::abs(coarse - row.reference) / std::abs(row.reference);
    if (std::abs(coarse - row.jump) > 1e-2 * std::abs(row.jump)) {
      throw Error(ErrorCode::GridTooCoarse, "flat symbol grid too coarse for xi = " + std::to_string(xi));
    }
    out.max_rel_err = std::max(out.max_rel_err, row.rel_err);
    if (row.rel_err > 0.0) {
      out.observed_order = std::min(out.observed_order, std::log2(row.coarse_rel_err / row.rel_err));
    }
    out.rows.push_back(row);
  }
  return out;
}

std::vector<double> angle_mesh(int points) {
  std::vector<double> theta(points);
  for (int j = 0; j < points; ++j) theta[j] = 2.0 * M_PI * j / points;
  return theta;
}

std::vector<double> sphere_chart(const Vector& z, double R, const std::vector<double>& theta) {
  if (z.size() != 3) throw Error(ErrorCode::InvalidArgument, "sphere chart in n = 2 takes z in R^3");
  if (!(R > 0.0)) throw Error(ErrorCode::InvalidRadius, "R must be positive");
  std::vector<double> rho(theta.size());
  const double shift2 = z(1) * z(1) + z(2) * z(2);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double p = z(1) * std::cos(theta[j]) + z(2) * std::sin(theta[j]);
    const double radicand = p * p + (R + z(0)) * (R + z(0)) - shift2;
    if (!(radicand > 0.0)) {
      throw Error(ErrorCode::InvalidRadius, "radicand of the sphere chart is not positive");
    }
    rho[j] = p - R + std::sqrt(radicand);
  }
  return rho;
}

std::vector<double> sphere_chart_derivative(const Vector& h, double R,
                                            const std::vector<double>& theta) {
  const double eps = 1e-6 * R;
  const std::vector<double> plus = sphere_chart(eps * h, R, theta);
  const std::vector<double> minus = sphere_chart(-eps * h, R, theta);
  std::vector<double> d(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) d[j] = (plus[j] - minus[j]) / (2.0 * eps);
  return d;
}

MSTangentCheck ms_tangent_kernel_check(const MSConfig& cfg,
                                       const std::vector<std::function<double(double)>>& extra,
                                       double tol, double tol_zero) {
  const ModeEigenReport modes = mode_eigenvalues(cfg, tol_zero);
  const std::vector<double> theta = angle_mesh(std::max(64, 8 * cfg.k_max));
  const Eigen::Index m = static_cast<Eigen::Index>(theta.size());

  Matrix tangent(m, 3 + static_cast<Eigen::Index>(extra.size()));
  for (int j = 0; j < 3; ++j) {
    const std::vector<double> d = sphere_chart_derivative(Vector::Unit(3, j), cfg.R, theta);
    for (Eigen::Index i = 0; i < m; ++i) tangent(i, j) = d[i];
  }
  for (std::size_t e = 0; e < extra.size(); ++e) {
    for (Eigen::Index i = 0; i < m; ++i) tangent(i, 3 + e) = extra[e](theta[i]);
  }

  std::vector<Vector> kernel;
  for (const ModeRow& row : modes.modes) {
    if (std::abs(row.lambda) > tol_zero) continue;
    Vector c(m), s(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      c(i) = std::cos(row.k * theta[i]);
      s(i) = std::sin(row.k * theta[i]);
    }
    kernel.push_back(c);
    if (row.k > 0) kernel.push_back(s);
  }
  MSTangentCheck out;
  out.kernel_dim = static_cast<int>(kernel.size());
  const Matrix tq = orthonormal_range(tangent);
  out.tangent_dim = static_cast<int>(tq.cols());
  if (kernel.empty()) return out;
  Matrix k(m, static_cast<Eigen::Index>(kernel.size()));
  for (std::size_t j = 0; j < kernel.size(); ++j) k.col(j) = kernel[j];
  const Matrix kq = orthonormal_range(k);
  const std::vector<double> angles = principal_angles(tq, kq);
  out.max_angle = angles.empty() ? 0.0 : angles.back();
  out.equal = out.tangent_dim == out.kernel_dim && out.max_angle <= tol;
  return out;
}

}  // namespace normstab
