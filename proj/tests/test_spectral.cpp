#include <random>

#include "doctest.h"
#include "normstab/errors.hpp"
#include "normstab/spectral.hpp"
#include "oracles.hpp"

using namespace normstab;

namespace {

Matrix mat(int n, std::initializer_list<double> v) {
  Matrix m(n, n);
  auto it = v.begin();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = *it++;
  return m;
}

double norm_inf(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

TEST_CASE("square matrix validation") {
  CHECK_THROWS_AS(SquareMatrix(Matrix(2, 3)), Error);
  CHECK_THROWS_AS(SquareMatrix(Matrix(0, 0)), Error);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(SquareMatrix{bad}, Error);
}

TEST_CASE("eigenvalues agree with the characteristic polynomial oracle") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    const auto ref = oracle::durand_kerner(oracle::charpoly(a));
    const SpectrumReport r = eigen_decompose(SquareMatrix(a));
    REQUIRE(r.eigenvalues.size() == static_cast<std::size_t>(n));
    CHECK(oracle::spectrum_distance(r.eigenvalues, ref) < 1e-8);
  }
}

TEST_CASE("grouping uses the v' + A v convention") {
  const SpectrumReport r = eigen_decompose(SquareMatrix(mat(3, {0, 0, 0, 0, 2, 0, 0, 0, -3})));
  CHECK(r.count(SpectralGroup::Center) == 1);
  CHECK(r.count(SpectralGroup::Stable) == 1);
  CHECK(r.count(SpectralGroup::Unstable) == 1);
  CHECK(r.gap_margin == doctest::Approx(2.0));
  CHECK_FALSE(r.inconclusive);
}

TEST_CASE("eigenvalue inside the ambiguity band flags the report") {
  const SquareMatrix a(mat(2, {1e-7, 0, 0, 1}));
  const SpectrumReport r = eigen_decompose(a);
  CHECK(r.inconclusive);
  CHECK(r.count(SpectralGroup::Ambiguous) == 1);
  try {
    spectral_projections(a, r);
    FAIL("expected Inconclusive");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Inconclusive);
  }
  // the same value is a center eigenvalue under a coarser zero tolerance
  CHECK_FALSE(eigen_decompose(a, {1e-6, 1e-5}).inconclusive);
}

TEST_CASE("semisimple zero against brute-force Jordan nullities") {
  std::mt19937_64 rng(11);
  const std::vector<std::vector<std::pair<double, int>>> cases = {
      {{0.0, 1}, {1.0, 1}},
      {{0.0, 2}},
      {{0.0, 1}, {0.0, 1}},
      {{0.0, 1}, {0.0, 2}, {2.0, 1}},
      {{0.0, 3}, {-1.0, 1}},
      {{0.0, 1}, {0.0, 1}, {0.0, 1}, {0.5, 2}},
      {{3.0, 2}, {1.0, 1}},
  };
  for (const auto& blocks : cases) {
    const Matrix j = oracle::jordan(blocks);
    const Matrix q = oracle::random_orthogonal(static_cast<int>(j.rows()), rng);
    const auto [n1, n2] = oracle::jordan_nullities(blocks);
    const SemisimpleReport r = semisimple_zero(SquareMatrix(q * j * q.transpose()));
    CHECK(r.kernel_dim == n1);
    CHECK(r.semisimple == (n1 == n2));
    CHECK(r.kernel_basis.cols() == n1);
    CHECK(r.margin > 1.0);
  }
}

TEST_CASE("example matrices") {
  const SemisimpleReport e1 = semisimple_zero(SquareMatrix(mat(2, {0, 1, 0, 1})));
  const SemisimpleReport e2 = semisimple_zero(SquareMatrix(mat(2, {0, 1, 0, 0})));
  const SemisimpleReport e3 = semisimple_zero(SquareMatrix(mat(2, {0, 0, 0, 0})));
  CHECK(e1.semisimple);
  CHECK_FALSE(e2.semisimple);
  CHECK(e3.semisimple);
  CHECK(e1.kernel_dim == 1);
  CHECK(e2.kernel_dim == 1);
  CHECK(e3.kernel_dim == 2);
}

TEST_CASE("spectral projections satisfy the split invariants") {
  std::mt19937_64 rng(3);
  const Matrix q = oracle::random_orthogonal(5, rng);
  Matrix d = oracle::jordan({{0.0, 1}, {0.0, 1}, {1.5, 2}, {-0.7, 1}});
  d(2, 4) = 0.3;
  const Matrix a = q * d * q.transpose();
  const SquareMatrix A(a);
  const SpectrumReport r = eigen_decompose(A);
  const SpectralSplit s = spectral_projections(A, r);
  CHECK(s.mc == 2);
  CHECK(s.ms == 2);
  CHECK(s.mu == 1);
  const Matrix id = Matrix::Identity(5, 5);
  const double tol = 1e-10 * norm_inf(a);
  for (const Matrix* p : {&s.Pc, &s.Ps, &s.Pu}) {
    CHECK(norm_inf(*p * *p - *p) < tol);
    CHECK(norm_inf(a * *p - *p * a) < tol);
  }
  CHECK(norm_inf(s.Pc + s.Ps + s.Pu - id) < tol);
  CHECK(norm_inf(s.Pc * s.Ps) < tol);
  CHECK(norm_inf(s.Ps * s.Pu) < tol);
  CHECK((s.coords_s * s.basis_s - Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(s.As.eigenvalues().real().minCoeff() == doctest::Approx(1.5));
  CHECK(s.Au.eigenvalues().real().maxCoeff() == doctest::Approx(-0.7));
  CHECK(s.Ac.norm() < 1e-12);
  CHECK(s.idempotence_residual < kProjectionTolerance);
  CHECK(s.commutation_residual < kProjectionTolerance);
}

TEST_CASE("orthogonal conjugation invariance") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Matrix a = Matrix::Zero(4, 4);
  a.bottomRightCorner(3, 3) << 2, 1, 0, -1, 2, 0, 0, 0, -1;
  const Matrix q0 = oracle::random_orthogonal(4, rng);
  a = q0 * a * q0.transpose();
  const SpectrumReport r = eigen_decompose(SquareMatrix(a));
  const SpectralSplit s = spectral_projections(SquareMatrix(a), r);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix q = oracle::random_orthogonal(4, rng);
    const Matrix b = q * a * q.transpose();
    const SpectrumReport rb = eigen_decompose(SquareMatrix(b));
    CHECK(oracle::spectrum_distance(r.eigenvalues, rb.eigenvalues) < 1e-12);
    const SpectralSplit sb = spectral_projections(SquareMatrix(b), rb);
    CHECK((sb.Pc - q * s.Pc * q.transpose()).norm() < 1e-10);
    CHECK((sb.Ps - q * s.Ps * q.transpose()).norm() < 1e-10);
    CHECK((sb.Pu - q * s.Pu * q.transpose()).norm() < 1e-10);
  }
}

TEST_CASE("principal angles") {
  Matrix a(3, 1), b(3, 2);
  a << 1, 0, 0;
  b << 0, 0, 1, 0, 0, 1;
  CHECK(principal_angles(a, b)[0] == doctest::Approx(M_PI / 2));
  a << std::cos(0.3), std::sin(0.3), 0;
  b << 1, 0, 0, 0, 0, 1;
  CHECK(principal_angles(a, b)[0] == doctest::Approx(0.3));
  CHECK(containment_angle(a, b) == doctest::Approx(0.3));
  CHECK(containment_angle(b.leftCols(1), b) == doctest::Approx(0.0));
}
