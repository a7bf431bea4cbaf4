#include <random>
#include <thread>

#include "doctest.h"
#include "normstab/errors.hpp"
#include "normstab/examples_ode.hpp"

using namespace normstab;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// u' = -u (|u|^2 - 1) in R^2: a circle of equilibria with A0 = 2 u u^T.
VectorFieldSpec radial_field() {
  VectorFieldSpec fs;
  fs.n = 2;
  fs.rhs = [](const Vector& u) { return Vector(-u * (u.squaredNorm() - 1.0)); };
  return fs;
}

}  // namespace

TEST_CASE("linearize reproduces the example matrices") {
  const Vector u = builtin_problem("Ex1").u_star();
  CHECK((linearize(example_field(ExampleKind::Ex1).field, u).entries() - mat2(0, 1, 0, 1)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((linearize(example_field(ExampleKind::Ex2m1).field, u).entries() - mat2(0, 1, 0, 0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((linearize(example_field(ExampleKind::Ex2m2).field, u).entries() - mat2(0, 0, 0, 0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("finite-difference Jacobian matches exact Jacobians") {
  for (const char* name : {"Ex1", "Ex2m1", "Ex2m2", "Hyperbolic3D"}) {
    const BuiltinProblem p = builtin_problem(name);
    Vector u = p.u_star();
    u(0) += 0.3;
    u(1) -= 0.2;
    const Matrix exact = p.field.jacobian(u);
    const Matrix fd = fd_jacobian(p.field.rhs, u);
    CHECK((exact - fd).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("linearize rejects points that are not equilibria") {
  const BuiltinProblem p = builtin_problem("Ex1");
  Vector u(2);
  u << 0.0, 1.1;
  try {
    linearize(p.field, u);
    FAIL("expected NotAnEquilibrium");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAnEquilibrium);
  }
}

TEST_CASE("classification verdicts of the builtin problems") {
  const Classification c1 = classify(builtin_problem("Ex1").field, builtin_problem("Ex1").chart);
  CHECK(c1.verdict == Verdict::NormallyStable);
  CHECK(c1.failed.empty());
  CHECK(c1.tangent.equal);

  const BuiltinProblem e2 = builtin_problem("Ex2m1");
  const Classification c2 = classify(e2.field, e2.chart);
  CHECK(c2.verdict == Verdict::Inconclusive);
  CHECK(c2.failed_labels() == std::vector<std::string>{"(iii)"});

  const BuiltinProblem e3 = builtin_problem("Ex2m2");
  const Classification c3 = classify(e3.field, e3.chart);
  CHECK(c3.verdict == Verdict::Inconclusive);
  CHECK(c3.failed_labels() == std::vector<std::string>{"(ii)"});

  const BuiltinProblem h = builtin_problem("Hyperbolic3D");
  const Classification ch = classify(h.field, h.chart);
  CHECK(ch.verdict == Verdict::NormallyHyperbolic);
  CHECK(ch.mc == 1);
  CHECK(ch.ms == 1);
  CHECK(ch.mu == 1);
}

TEST_CASE("isolated equilibrium reduces to linearized stability") {
  VectorFieldSpec fs;
  fs.n = 2;
  fs.rhs = [](const Vector& u) {
    Vector f(2);
    f << -u(0) + u(1) * u(1), -2.0 * u(1);
    return f;
  };
  ManifoldChart point;
  point.m = 0;
  point.psi = [](const Vector&) { return Vector(Vector::Zero(2)); };
  CHECK(classify(fs, point).verdict == Verdict::NormallyStable);

  fs.rhs = [](const Vector& u) {
    Vector f(2);
    f << u(0), -2.0 * u(1);
    return f;
  };
  const Classification c = classify(fs, point);
  CHECK(c.verdict == Verdict::NormallyHyperbolic);
  CHECK(c.mu == 1);
}

TEST_CASE("tangent check detects a wrong chart") {
  const BuiltinProblem p = builtin_problem("Ex1");
  ManifoldChart wrong;
  wrong.m = 1;
  wrong.psi = [](const Vector& z) {
    Vector u(2);
    u << 0.0, 1.0 + z(0);
    return u;
  };
  const SquareMatrix a0(linearize(p.field, p.u_star()));
  const TangentCheck t = tangent_kernel_check(wrong, a0);
  CHECK_FALSE(t.contained);
  CHECK(t.max_angle == doctest::Approx(M_PI / 2));

  ManifoldChart flat;
  flat.m = 1;
  flat.psi = [](const Vector&) {
    Vector u(2);
    u << 0.0, 1.0;
    return u;
  };
  CHECK_THROWS_AS(tangent_kernel_check(flat, a0), Error);
  const Classification c = classify(p.field, wrong);
  CHECK(c.verdict == Verdict::Inconclusive);
}

TEST_CASE("radial field with the unit circle") {
  const VectorFieldSpec fs = radial_field();
  const Classification c = classify(fs, circle_chart(2));
  CHECK(c.verdict == Verdict::NormallyStable);
  CHECK(c.spectrum.values_in(SpectralGroup::Stable)[0].real() == doctest::Approx(2.0));
}

TEST_CASE("graph map carries the equilibria and the normal form is consistent") {
  for (const char* name : {"Ex1", "Hyperbolic3D"}) {
    CAPTURE(name);
    const BuiltinProblem p = builtin_problem(name);
    const Vector us = p.u_star();
    const SquareMatrix a0(linearize(p.field, us));
    const SpectralSplit split = spectral_projections(a0, eigen_decompose(a0));
    const GraphMap gm = solve_graph_map(p.field, us, split, 0.25);
    const int n = p.field.n;
    CHECK(gm.phi(Vector::Zero(n)).norm() < 1e-14);
    CHECK(gm.derivative_norm(Vector::Zero(n)) < 1e-8);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 30; ++k) {
      const Vector x = split.basis_c.col(0) * (0.9 * gm.rho0() * U(rng));
      // on the graph the field vanishes and the point lies on the circle
      const Vector u = us + x + gm.phi(x);
      CHECK(p.field(u).norm() < 1e-9);
      CHECK(std::abs(std::hypot(u(0), u(1)) - 1.0) < 1e-9);
      // normal form roundtrip
      const Vector y = split.Ps * Vector::NullaryExpr(n, [&] { return 0.02 * U(rng); });
      const Vector z = split.Pu * Vector::NullaryExpr(n, [&] { return 0.02 * U(rng); });
      const NormalCoords nc{x, y, z};
      const NormalCoords back = to_normal_form(from_normal_form(nc, gm), gm);
      CHECK((back.x - x).norm() + (back.y - y).norm() + (back.z - z).norm() < 1e-12);
      // T and R vanish on y = z = 0
      const NormalFormRhs r = normal_form_rhs({x, Vector::Zero(n), Vector::Zero(n)}, gm);
      CHECK(r.T.norm() < 1e-12);
      CHECK(r.R_s.norm() + r.R_u.norm() < 1e-12);
      // chart points are graph points
      const double zeta = 0.2 * U(rng);
      const Vector w = p.chart.at(Vector::Constant(1, zeta)) - us;
      const Vector xc = split.Pc * w;
      if (xc.norm() < gm.rho0()) CHECK((split.Psu() * w - gm.phi(xc)).norm() < 1e-9);
    }
    const Vector far = split.basis_c.col(0) * (2.0 * gm.rho0());
    CHECK_THROWS_AS(gm.evaluate(far), Error);
  }
}

TEST_CASE("graph map derivative agrees with differences") {
  const BuiltinProblem p = builtin_problem("Ex1");
  const SquareMatrix a0(linearize(p.field, p.u_star()));
  const SpectralSplit split = spectral_projections(a0, eigen_decompose(a0));
  const GraphMap gm = solve_graph_map(p.field, p.u_star(), split, 0.25);
  const Vector h = split.basis_c.col(0);
  const Vector x = 0.1 * h;
  const double e = 1e-6;
  const Vector fd = (gm.phi(x + e * h) - gm.phi(x - e * h)) / (2 * e);
  const auto [ds, du] = gm.derivative_apply(x, h);
  CHECK((ds + du - fd).norm() < 1e-7);
}

TEST_CASE("graph map is safe for concurrent readers") {
  const BuiltinProblem p = builtin_problem("Hyperbolic3D");
  const SquareMatrix a0(linearize(p.field, p.u_star()));
  const SpectralSplit split = spectral_projections(a0, eigen_decompose(a0));
  const GraphMap gm = solve_graph_map(p.field, p.u_star(), split, 0.25);
  std::vector<Vector> serial, parallel(64);
  for (int k = 0; k < 64; ++k) serial.push_back(gm.phi(split.basis_c.col(0) * (0.2 * (k - 32) / 32.0)));
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      for (int k = t; k < 64; k += 4) parallel[k] = gm.phi(split.basis_c.col(0) * (0.2 * (k - 32) / 32.0));
    });
  }
  for (auto& t : pool) t.join();
  for (int k = 0; k < 64; ++k) CHECK((serial[k] - parallel[k]).norm() == 0.0);
}
