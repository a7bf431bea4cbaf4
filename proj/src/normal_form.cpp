#include "normstab/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include "normstab/errors.hpp"

namespace normstab {

bool VectorFieldSpec::contains(const Vector& u) const {
  if (!u.allFinite() || u.size() != n) return false;
  if (in_domain) return in_domain(u);
  if (!std::isfinite(domain_radius) || center.size() != n) return true;
  return (u - center).norm() <= domain_radius;
}

Matrix VectorFieldSpec::jacobian_at(const Vector& u) const {
  if (jacobian) return jacobian(u);
  return fd_jacobian(rhs, u);
}

Matrix fd_jacobian(const Field& f, const Vector& u) {
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + u.norm());
  const Vector f0 = f(u);
  Matrix jac(f0.size(), u.size());
  Vector up = u, um = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    up(j) = u(j) + h;
    um(j) = u(j) - h;
    jac.col(j) = (f(up) - f(um)) / (2.0 * h);
    up(j) = um(j) = u(j);
  }
  return jac;
}

Matrix ManifoldChart::derivative(const Vector& zeta) const {
  if (m == 0) return Matrix(base_point().size(), 0);
  return fd_jacobian(psi, zeta);
}

SquareMatrix linearize(const VectorFieldSpec& fs, const Vector& u_star, double eps_eq) {
  if (u_star.size() != fs.n) {
    throw Error(ErrorCode::InvalidArgument, "linearize: state dimension mismatch");
  }
  const double residual = fs(u_star).norm();
  if (!(residual <= eps_eq)) {
    std::ostringstream msg;
    msg << "||F(u_*)|| = " << residual << " exceeds " << eps_eq;
    throw Error(ErrorCode::NotAnEquilibrium, msg.str());
  }
  return SquareMatrix(-fs.jacobian_at(u_star));
}

TangentCheck tangent_kernel_check(const ManifoldChart& chart, const SquareMatrix& a0, double tol,
                                  double tol_zero, double rank_tol) {
  TangentCheck out;
  out.m = chart.m;
  const SemisimpleReport kernel = semisimple_zero(a0, tol_zero);
  out.kernel_dim = kernel.kernel_dim;
  if (chart.m == 0) {
    out.contained = true;
    out.equal = kernel.kernel_dim == 0;
    return out;
  }
  const Matrix d = chart.derivative(Vector::Zero(chart.m));
  const Matrix tangent = orthonormal_range(d, rank_tol);
  if (tangent.cols() < chart.m) {
    throw Error(ErrorCode::RankDeficientChart,
                "rank Psi'(0) = " + std::to_string(tangent.cols()) + " < m = " +
                    std::to_string(chart.m));
  }
  out.angles = principal_angles(tangent, kernel.kernel_basis);
  out.max_angle = containment_angle(tangent, kernel.kernel_basis);
  out.contained = chart.m <= kernel.kernel_dim && out.max_angle <= tol;
  out.equal = out.contained && chart.m == kernel.kernel_dim;
  return out;
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::NormallyStable: return "NormallyStable";
    case Verdict::NormallyHyperbolic: return "NormallyHyperbolic";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

bool Classification::failed_condition(const std::string& label) const {
  return std::any_of(failed.begin(), failed.end(),
                     [&](const ConditionFailure& f) { return f.label == label; });
}

std::vector<std::string> Classification::failed_labels() const {
  std::vector<std::string> out;
  for (const auto& f : failed) out.push_back(f.label);
  return out;
}

namespace {

std::vector<Vector> chart_samples(const ManifoldChart& chart) {
  std::vector<Vector> out{Vector::Zero(chart.m)};
  for (int i = 0; i < chart.m; ++i) {
    for (double frac : {0.25, 0.5}) {
      for (double sign : {-1.0, 1.0}) {
        Vector z = Vector::Zero(chart.m);
        z(i) = sign * frac * chart.chart_radius;
        out.push_back(z);
      }
    }
  }
  return out;
}

}  // namespace

Classification classify(const VectorFieldSpec& fs, const ManifoldChart& chart,
                        const ClassifyTolerances& tol) {
  Classification out;
  auto fail = [&](const char* label, std::string why) {
    if (!out.failed_condition(label)) out.failed.push_back({label, std::move(why)});
  };

  out.u_star = chart.base_point();
  if (out.u_star.size() != fs.n) {
    throw Error(ErrorCode::InvalidArgument, "chart and field dimensions differ");
  }

  // (i): the chart must parameterize equilibria and have full rank.
  for (const Vector& z : chart_samples(chart)) {
    const Vector u = chart.at(z);
    const double r = fs.contains(u) ? fs(u).norm() : std::numeric_limits<double>::infinity();
    out.equilibrium_residual = std::max(out.equilibrium_residual, r);
  }
  if (!(out.equilibrium_residual <= tol.eps_eq)) {
    std::ostringstream msg;
    msg << "equilibrium residual on chart samples " << out.equilibrium_residual << " > "
        << tol.eps_eq;
    fail("(i)", msg.str());
  }
  const double base_residual = fs(out.u_star).norm();
  if (!(base_residual <= tol.eps_eq)) {
    out.verdict = Verdict::Inconclusive;
    return out;
  }

  const SquareMatrix a0 = linearize(fs, out.u_star, tol.eps_eq);
  out.a0 = a0.entries();
  try {
    out.spectrum = eigen_decompose(a0, tol.spectral);
  } catch (const Error& e) {
    fail("(iv)", e.what());
    out.verdict = Verdict::Inconclusive;
    return out;
  }
  out.mc = out.spectrum.count(SpectralGroup::Center);
  out.ms = out.spectrum.count(SpectralGroup::Stable);
  out.mu = out.spectrum.count(SpectralGroup::Unstable);

  out.semisimple = semisimple_zero(a0, tol.spectral.tol_zero);
  try {
    out.tangent = tangent_kernel_check(chart, a0, tol.tangent_tol, tol.spectral.tol_zero,
                                       tol.rank_tol);
    if (!out.tangent.equal) {
      std::ostringstream msg;
      msg << "tangent space (dim " << out.tangent.m << ") vs kernel (dim "
          << out.tangent.kernel_dim << "), max angle " << out.tangent.max_angle;
      fail("(ii)", msg.str());
    }
  } catch (const Error& e) {
    fail("(i)", e.what());
    fail("(ii)", "tangent space undefined for a rank-deficient chart");
  }

  if (!out.semisimple.semisimple) {
    fail("(iii)", "nullity(A0) = " + std::to_string(out.semisimple.kernel_dim) +
                      " differs from nullity(A0^2)");
  } else if (out.mc != out.semisimple.kernel_dim) {
    fail("(iii)", "center group size " + std::to_string(out.mc) + " differs from kernel dim " +
                      std::to_string(out.semisimple.kernel_dim));
  }
  if (out.spectrum.inconclusive) {
    fail("(iv)", "eigenvalue inside the band tol_zero < |lambda|, |Re lambda| < gap");
  }

  if (!out.failed.empty()) {
    out.verdict = Verdict::Inconclusive;
  } else {
    out.verdict = out.mu == 0 ? Verdict::NormallyStable : Verdict::NormallyHyperbolic;
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GraphMap::Cache {
  std::shared_mutex mutex;
  std::map<std::vector<double>, GraphMap::Value> values;
};

GraphMap::GraphMap(VectorFieldSpec fs, Vector u_star, SpectralSplit split, SquareMatrix a0,
                   double rho0, GraphMapOptions options)
    : fs_(std::move(fs)),
      u_star_(std::move(u_star)),
      split_(std::move(split)),
      a0_(a0.entries()),
      basis_su_(split_.basis_su()),
      coords_su_(split_.coords_su()),
      rho0_(rho0),
      options_(options),
      cache_(std::make_shared<Cache>()) {}

Vector GraphMap::nonlinearity(const Vector& v) const { return fs_(u_star_ + v) + a0_ * v; }

GraphMap::Value GraphMap::solve(const Vector& x) const {
  const int msu = split_.ms + split_.mu;
  Value out;
  Vector c = Vector::Zero(msu);
  if (msu == 0) {
    out.phi_s = Vector::Zero(fs_.n);
    out.phi_u = Vector::Zero(fs_.n);
    return out;
  }
  auto residual = [&](const Vector& cc, bool& ok) -> Vector {
    const Vector u = u_star_ + x + basis_su_ * cc;
    ok = fs_.contains(u);
    if (!ok) return Vector::Constant(msu, std::numeric_limits<double>::infinity());
    return coords_su_ * fs_(u);
  };
  bool ok = true;
  Vector r = residual(c, ok);
  double rn = r.norm();
  int it = 0;
  for (; it < options_.max_iterations && rn > options_.eps_newton; ++it) {
    const Vector u = u_star_ + x + basis_su_ * c;
    const Matrix jac = coords_su_ * fs_.jacobian_at(u) * basis_su_;
    const Vector step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    while (t >= 1.0 / 1024.0) {
      const Vector trial = c + t * step;
      bool trial_ok = true;
      const Vector rt = residual(trial, trial_ok);
      const double rtn = rt.norm();
      if (trial_ok && rtn < (1.0 - 1e-4 * t) * rn) {
        c = trial;
        r = rt;
        rn = rtn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  if (!(rn <= options_.eps_newton)) {
    std::ostringstream msg;
    msg << "Newton residual " << rn << " after " << it << " iterations at ||x|| = " << x.norm();
    throw Error(ErrorCode::NewtonDiverged, msg.str());
  }
  out.phi_s = split_.basis_s * c.head(split_.ms);
  out.phi_u = split_.basis_u * c.tail(split_.mu);
  out.residual = rn;
  out.iterations = it;
  return out;
}

GraphMap::Value GraphMap::evaluate(const Vector& x) const {
  if (x.size() != fs_.n) throw Error(ErrorCode::InvalidArgument, "graph map: dimension mismatch");
  if (x.norm() > rho0_ * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "||x|| = " << x.norm() << " exceeds rho0 = " << rho0_;
    throw Error(ErrorCode::OutOfChart, msg.str());
  }
  const std::vector<double> key(x.data(), x.data() + x.size());
  {
    std::shared_lock lock(cache_->mutex);
    auto it = cache_->values.find(key);
    if (it != cache_->values.end()) return it->second;
  }
  Value v = solve(x);
  std::unique_lock lock(cache_->mutex);
  cache_->values.emplace(key, v);
  return v;
}

Vector GraphMap::phi(const Vector& x) const {
  const Value v = evaluate(x);
  return v.phi_s + v.phi_u;
}

Matrix GraphMap::implicit_derivative(const Vector& x, const Value& v) const {
  const int msu = split_.ms + split_.mu;
  if (msu == 0 || split_.mc == 0) return Matrix::Zero(msu, split_.mc);
  const Vector u = u_star_ + x + v.phi_s + v.phi_u;
  const Matrix fjac = fs_.jacobian_at(u);
  const Matrix jac = coords_su_ * fjac * basis_su_;
  return jac.colPivHouseholderQr().solve(-(coords_su_ * fjac * split_.basis_c));
}

std::pair<Vector, Vector> GraphMap::derivative_apply(const Vector& x, const Vector& h) const {
  const Value v = evaluate(x);
  const Matrix d = implicit_derivative(x, v);
  const Vector dc = d * (split_.coords_c * h);
  return {split_.basis_s * dc.head(split_.ms), split_.basis_u * dc.tail(split_.mu)};
}

double GraphMap::derivative_norm(const Vector& x) const {
  const Value v = evaluate(x);
  const Matrix d = implicit_derivative(x, v);
  if (d.size() == 0) return 0.0;
  const Matrix full = basis_su_ * d;
  Eigen::BDCSVD<Matrix> svd(full);
  return svd.singularValues()(0);
}

namespace {

std::vector<Vector> center_mesh(int mc, double radius) {
  std::vector<Vector> out;
  for (int i = 0; i < mc; ++i) {
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
      for (double sign : {-1.0, 1.0}) {
        Vector xi = Vector::Zero(mc);
        xi(i) = sign * frac * radius;
        out.push_back(xi);
      }
    }
  }
  if (mc >= 2) {
    for (int k = 0; k < 8; ++k) {
      const double ang = 2.0 * M_PI * (k + 0.5) / 8.0;
      Vector xi = Vector::Zero(mc);
      xi(0) = radius * std::cos(ang);
      xi(1) = radius * std::sin(ang);
      out.push_back(xi);
    }
  }
  return out;
}

}  // namespace

GraphMap solve_graph_map(const VectorFieldSpec& fs, const Vector& u_star, const SpectralSplit& split,
                         double rho0, GraphMapOptions options) {
  if (!(rho0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho0 must be positive");
  const SquareMatrix a0 = linearize(fs, u_star, 1e-8);
  const double floor = rho0 * options.min_radius_fraction;
  double radius = rho0;
  std::string last_failure;
  while (radius >= floor) {
    GraphMap gm(fs, u_star, split, a0, radius, options);
    bool good = true;
    try {
      const Vector zero = Vector::Zero(fs.n);
      if (gm.phi(zero).norm() > 10.0 * options.eps_newton) {
        throw Error(ErrorCode::NewtonDiverged, "phi(0) != 0");
      }
      for (const Vector& xi : center_mesh(split.mc, radius)) {
        const Vector x = split.basis_c * xi;
        const double dn = gm.derivative_norm(x);
        if (!(dn <= 1.0)) {
          std::ostringstream msg;
          msg << "||phi'(x)|| = " << dn << " at ||x|| = " << x.norm();
          last_failure = msg.str();
          good = false;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NewtonDiverged) throw;
      last_failure = e.what();
      good = false;
    }
    if (good) return gm;
    radius *= 0.5;
  }
  throw Error(ErrorCode::RadiusTooLarge, "no admissible rho0 found: " + last_failure);
}

NormalCoords to_normal_form(const Vector& v, const GraphMap& gm) {
  const SpectralSplit& sp = gm.split();
  NormalCoords c;
  c.x = sp.Pc * v;
  const GraphMap::Value phi = gm.evaluate(c.x);
  c.y = sp.Ps * v - phi.phi_s;
  c.z = sp.Pu * v - phi.phi_u;
  return c;
}

Vector from_normal_form(const NormalCoords& c, const GraphMap& gm) {
  return c.x + gm.phi(c.x) + c.y + c.z;
}

NormalFormRhs normal_form_rhs(const NormalCoords& c, const GraphMap& gm) {
  const SpectralSplit& sp = gm.split();
  const Vector on_graph = c.x + gm.phi(c.x);
  const Vector diff = gm.nonlinearity(on_graph + c.y + c.z) - gm.nonlinearity(on_graph);
  NormalFormRhs out;
  out.T = sp.Pc * diff;
  const auto [ds, du] = gm.derivative_apply(c.x, out.T);
  out.R_s = sp.Ps * diff - ds;
  out.R_u = sp.Pu * diff - du;
  return out;
}

}  // namespace normstab
