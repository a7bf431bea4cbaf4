#include "normstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <lapacke.h>

#include "normstab/errors.hpp"

namespace normstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SpectralGroup classify_value(Complex z, const SpectralTolerances& tol) {
  if (std::abs(z) <= tol.tol_zero) return SpectralGroup::Center;
  if (z.real() >= tol.gap) return SpectralGroup::Stable;
  if (z.real() <= -tol.gap) return SpectralGroup::Unstable;
  return SpectralGroup::Ambiguous;
}

struct RealSchur {
  Matrix t;
  Matrix q;
  std::vector<double> wr, wi;
};

RealSchur real_schur(const Matrix& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  RealSchur s{a, Matrix(n, n), std::vector<double>(n), std::vector<double>(n)};
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, s.t.data(), n,
                                        &sdim, s.wr.data(), s.wi.data(), s.q.data(), n);
  if (info != 0) {
    throw Error(ErrorCode::NonConvergence, "real Schur reduction failed (info=" +
                                               std::to_string(info) + ")");
  }
  return s;
}

struct GroupBlock {
  Matrix basis;
  Matrix coords;
  Matrix restricted;
};

// Reorders the Schur form so the selected eigenvalues lead, then decouples the
// leading block with a Sylvester solve: P = Q [I -Y; 0 0] Q^T where
// T11 Y - Y T22 = -T12.
GroupBlock group_block(const RealSchur& schur, const std::vector<lapack_logical>& select, int k) {
  const lapack_int n = static_cast<lapack_int>(schur.t.rows());
  GroupBlock out;
  if (k == 0) {
    out.basis = Matrix(n, 0);
    out.coords = Matrix(0, n);
    out.restricted = Matrix(0, 0);
    return out;
  }
  Matrix t = schur.t;
  Matrix q = schur.q;
  std::vector<double> wr(n), wi(n);
  lapack_int m = 0;
  double s = 0.0, sep = 0.0;
  std::vector<lapack_logical> sel = select;
  // dtrsen writes iwork[0] even for job = 'N', so the workspace is passed explicitly
  std::vector<double> work(std::max<lapack_int>(1, n));
  lapack_int iwork = 0;
  lapack_int info = LAPACKE_dtrsen_work(LAPACK_COL_MAJOR, 'N', 'V', sel.data(), n, t.data(), n,
                                        q.data(), n, wr.data(), wi.data(), &m, &s, &sep,
                                        work.data(), static_cast<lapack_int>(work.size()), &iwork, 1);
  if (info != 0 || m != k) {
    throw Error(ErrorCode::IllConditioned, "Schur reordering failed (info=" +
                                               std::to_string(info) + ")");
  }
  out.basis = q.leftCols(k);
  out.restricted = t.topLeftCorner(k, k);
  if (k == n) {
    out.coords = q.transpose();
    return out;
  }
  const lapack_int rest = n - k;
  Matrix t11 = t.topLeftCorner(k, k);
  Matrix t22 = t.bottomRightCorner(rest, rest);
  Matrix y = -t.topRightCorner(k, rest);
  double scale = 1.0;
  info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, k, rest, t11.data(), k, t22.data(), rest,
                        y.data(), k, &scale);
  if (info < 0 || scale <= 0.0) {
    throw Error(ErrorCode::IllConditioned, "Sylvester decoupling failed");
  }
  if (info == 1) {
    throw Error(ErrorCode::IllConditioned,
                "spectral groups too close for a reliable decoupling");
  }
  y /= scale;
  Matrix left(k, n);
  left.leftCols(k).setIdentity();
  left.rightCols(rest) = -y;
  out.coords = left * q.transpose();
  return out;
}

double frob(const Matrix& m) { return m.size() == 0 ? 0.0 : m.norm(); }

}  // namespace

SquareMatrix::SquareMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "SquareMatrix requires a non-empty square matrix");
  }
  if (!entries_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "SquareMatrix entries must be finite");
  }
}

const char* to_string(SpectralGroup group) noexcept {
  switch (group) {
    case SpectralGroup::Center: return "center";
    case SpectralGroup::Stable: return "stable";
    case SpectralGroup::Unstable: return "unstable";
    case SpectralGroup::Ambiguous: return "ambiguous";
  }
  return "?";
}

int SpectrumReport::count(SpectralGroup group) const {
  return static_cast<int>(std::count(groups.begin(), groups.end(), group));
}

std::vector<Complex> SpectrumReport::values_in(SpectralGroup group) const {
  std::vector<Complex> out;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (groups[i] == group) out.push_back(eigenvalues[i]);
  }
  return out;
}

SpectrumReport eigen_decompose(const SquareMatrix& a, const SpectralTolerances& tol) {
  if (!(tol.tol_zero >= 0.0) || !(tol.tol_zero < tol.gap)) {
    throw Error(ErrorCode::InvalidArgument, "eigen_decompose requires 0 <= tol_zero < gap");
  }
  const lapack_int n = a.n();
  Matrix work = a.entries();
  std::vector<double> wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(),
                                        wi.data(), nullptr, 1, nullptr, 1);
  if (info != 0) {
    throw Error(ErrorCode::NonConvergence,
                "QR iteration did not converge (info=" + std::to_string(info) + ")");
  }
  SpectrumReport report;
  report.tolerances = tol;
  report.gap_margin = kInf;
  for (lapack_int i = 0; i < n; ++i) {
    // LAPACK returns conjugate pairs with the positive imaginary part first.
    const Complex z(wr[i], wi[i]);
    const SpectralGroup g = classify_value(z, tol);
    report.eigenvalues.push_back(z);
    report.groups.push_back(g);
    if (g == SpectralGroup::Ambiguous) report.inconclusive = true;
    if (g != SpectralGroup::Center) report.gap_margin = std::min(report.gap_margin, std::abs(z.real()));
  }
  return report;
}

EigenPairs eigen_pairs(const SquareMatrix& a) {
  const lapack_int n = a.n();
  Matrix work = a.entries();
  Matrix vr(n, n);
  std::vector<double> wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, work.data(), n, wr.data(),
                                        wi.data(), nullptr, 1, vr.data(), n);
  if (info != 0) {
    throw Error(ErrorCode::NonConvergence,
                "QR iteration did not converge (info=" + std::to_string(info) + ")");
  }
  EigenPairs out{Eigen::VectorXcd(n), Eigen::MatrixXcd(n, n)};
  for (lapack_int j = 0; j < n; ++j) {
    out.values(j) = Complex(wr[j], wi[j]);
    if (wi[j] > 0.0 && j + 1 < n) {
      out.vectors.col(j) = vr.col(j).cast<Complex>() + Complex(0.0, 1.0) * vr.col(j + 1).cast<Complex>();
      out.vectors.col(j + 1) = out.vectors.col(j).conjugate();
      out.values(j + 1) = Complex(wr[j + 1], wi[j + 1]);
      ++j;
    } else {
      out.vectors.col(j) = vr.col(j).cast<Complex>();
    }
  }
  for (lapack_int j = 0; j < n; ++j) {
    const double nrm = out.vectors.col(j).norm();
    if (nrm > 0.0) out.vectors.col(j) /= nrm;
  }
  return out;
}

Matrix SpectralSplit::basis_su() const {
  Matrix b(n(), ms + mu);
  b << basis_s, basis_u;
  return b;
}

Matrix SpectralSplit::coords_su() const {
  Matrix c(ms + mu, n());
  c << coords_s, coords_u;
  return c;
}

SpectralSplit spectral_projections(const SquareMatrix& a, const SpectrumReport& report,
                                   double eps_proj) {
  if (report.inconclusive) {
    throw Error(ErrorCode::Inconclusive,
                "spectrum has eigenvalues inside the ambiguous band; no projections");
  }
  const int n = a.n();
  if (static_cast<int>(report.eigenvalues.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "spectrum report does not match the matrix size");
  }
  const RealSchur schur = real_schur(a.entries());

  auto selection = [&](SpectralGroup g, int& k) {
    std::vector<lapack_logical> sel(n, 0);
    k = 0;
    for (int i = 0; i < n; ++i) {
      if (classify_value(Complex(schur.wr[i], schur.wi[i]), report.tolerances) == g) {
        sel[i] = 1;
        ++k;
      }
    }
    if (k != report.count(g)) {
      throw Error(ErrorCode::IllConditioned,
                  std::string("group '") + to_string(g) +
                      "' changes size between eigenvalue passes; tolerance band too tight");
    }
    return sel;
  };

  SpectralSplit split;
  int kc = 0, ks = 0, ku = 0;
  const auto sel_c = selection(SpectralGroup::Center, kc);
  const auto sel_s = selection(SpectralGroup::Stable, ks);
  const auto sel_u = selection(SpectralGroup::Unstable, ku);

  GroupBlock c = group_block(schur, sel_c, kc);
  GroupBlock s = group_block(schur, sel_s, ks);
  GroupBlock u = group_block(schur, sel_u, ku);

  split.mc = kc;
  split.ms = ks;
  split.mu = ku;
  split.basis_c = std::move(c.basis);
  split.basis_s = std::move(s.basis);
  split.basis_u = std::move(u.basis);
  split.coords_c = std::move(c.coords);
  split.coords_s = std::move(s.coords);
  split.coords_u = std::move(u.coords);
  split.Ac = std::move(c.restricted);
  split.As = std::move(s.restricted);
  split.Au = std::move(u.restricted);
  auto proj = [n](const Matrix& b, const Matrix& l) {
    return b.cols() == 0 ? Matrix(Matrix::Zero(n, n)) : Matrix(b * l);
  };
  split.Pc = proj(split.basis_c, split.coords_c);
  split.Ps = proj(split.basis_s, split.coords_s);
  split.Pu = proj(split.basis_u, split.coords_u);

  const Matrix& A = a.entries();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix* ps[3] = {&split.Pc, &split.Ps, &split.Pu};
  double pnorm = 1.0;
  for (const Matrix* p : ps) {
    pnorm = std::max(pnorm, frob(*p));
    split.idempotence_residual = std::max(split.idempotence_residual, frob((*p) * (*p) - *p));
    split.commutation_residual = std::max(split.commutation_residual, frob(A * (*p) - (*p) * A));
  }
  split.commutation_residual /= std::max(1.0, frob(A));
  split.completeness_residual = frob(split.Pc + split.Ps + split.Pu - id);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) split.cross_residual = std::max(split.cross_residual, frob((*ps[i]) * (*ps[j])));
    }
  }
  const double bound = eps_proj * pnorm * pnorm;
  if (split.idempotence_residual > bound || split.completeness_residual > bound ||
      split.cross_residual > bound || split.commutation_residual > bound) {
    throw Error(ErrorCode::IllConditioned,
                "spectral projections violate their invariants (projection norm " +
                    std::to_string(pnorm) + ")");
  }
  return split;
}

namespace {

struct NullityResult {
  int nullity;
  double margin;
};

NullityResult nullity_with_margin(const Vector& sv, double threshold) {
  NullityResult r{0, kInf};
  double smallest_kept = kInf, largest_dropped = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= threshold) {
      ++r.nullity;
      largest_dropped = std::max(largest_dropped, sv(i));
    } else {
      smallest_kept = std::min(smallest_kept, sv(i));
    }
  }
  if (threshold > 0.0) {
    if (smallest_kept < kInf) r.margin = std::min(r.margin, smallest_kept / threshold);
    if (largest_dropped > 0.0) r.margin = std::min(r.margin, threshold / largest_dropped);
  }
  return r;
}

}  // namespace

int numerical_nullity(const Matrix& a, double tol_rel) {
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  if (smax == 0.0) return static_cast<int>(a.cols());
  return nullity_with_margin(sv, tol_rel * smax).nullity +
         static_cast<int>(a.cols() - sv.size());
}

SemisimpleReport semisimple_zero(const SquareMatrix& a, double tol_zero) {
  const Matrix& A = a.entries();
  const int n = a.n();
  SemisimpleReport out;
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double smax = sv(0);
  if (smax == 0.0) {
    out.semisimple = true;
    out.kernel_dim = n;
    out.kernel_basis = Matrix::Identity(n, n);
    out.margin = kInf;
    return out;
  }
  const NullityResult na = nullity_with_margin(sv, tol_zero * smax);
  Eigen::BDCSVD<Matrix> svd2(A * A);
  const NullityResult na2 = nullity_with_margin(svd2.singularValues(), tol_zero * smax * smax);
  out.kernel_dim = na.nullity;
  out.semisimple = na.nullity == na2.nullity;
  out.kernel_basis = svd.matrixV().rightCols(na.nullity);
  out.margin = std::min(na.margin, na2.margin);
  return out;
}

Matrix orthonormal_range(const Matrix& a, double tol_rel) {
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol_rel * sv(0)) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  std::vector<double> out;
  if (a.cols() == 0 || b.cols() == 0) return out;
  Eigen::BDCSVD<Matrix> svd(a.transpose() * b);
  const Vector& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    out.push_back(std::acos(std::clamp(sv(i), -1.0, 1.0)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double containment_angle(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return 0.0;
  const Matrix resid = b.cols() == 0 ? a : Matrix(a - b * (b.transpose() * a));
  Eigen::BDCSVD<Matrix> svd(resid);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return std::asin(std::clamp(smax, 0.0, 1.0));
}

}  // namespace normstab
