#include <cmath>
#include <functional>

#include "doctest.h"
#include "normstab/errors.hpp"
#include "normstab/mullins_sekerka.hpp"
#include "oracles.hpp"

using namespace normstab;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("harmonic oracle reduces to the whole-plane jump") {
  for (int k = 1; k <= 6; ++k) CHECK(oracle::harmonic_jump(k, 1.0, 1e6) == doctest::Approx(-2.0 * k));
}

TEST_CASE("mode jumps against r^{+-k} harmonics") {
  for (double R : {1.0, 2.0}) {
    MSConfig c;
    c.R = R;
    c.R_out = 20.0 * R;
    for (int k = 0; k <= 6; ++k) {
      CAPTURE(k);
      const double ref = oracle::harmonic_jump(k, R, c.R_out);
      const double got = dtn_jump_mode(k, c);
      CHECK(std::abs(got - ref) <= 1e-5 * (1.0 + std::abs(ref)));
    }
  }
  MSConfig small;
  small.R_out = 3.0;
  CHECK(std::abs(dtn_jump_mode(1, small) - oracle::harmonic_jump(1, 1.0, 3.0)) < 1e-5);
}

TEST_CASE("mode eigenvalues and the kernel") {
  const ModeEigenReport r = mode_eigenvalues(MSConfig{});
  REQUIRE(r.modes.size() == 7);
  CHECK(std::abs(r.modes[0].lambda) < 1e-6);
  CHECK(std::abs(r.modes[1].lambda) < 1e-6);
  CHECK(r.kernel_dim == 3);
  for (int k = 2; k <= 6; ++k) {
    CHECK(r.modes[k].reference == doctest::Approx(2.0 * k * (k * k - 1)));
    CHECK(std::abs(r.modes[k].lambda / r.modes[k].reference - 1.0) < 0.01);
  }
  CHECK(a_sigma_mode(3, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("flat symbol converges at second order") {
  const SymbolCheck s = flat_symbol_check({0.5, 1.0, 2.0, 4.0}, 40.0, 80000);
  CHECK(s.max_rel_err <= 1e-3);
  CHECK(s.observed_order > 1.8);
  CHECK(s.observed_order < 2.2);
  for (const SymbolRow& r : s.rows) CHECK(r.reference == doctest::Approx(-2.0 * std::pow(r.xi, 3)));
  CHECK(code_of([] { flat_symbol_check({4.0}, 40.0, 16); }) == ErrorCode::GridTooCoarse);
}

TEST_CASE("sphere chart") {
  const std::vector<double> th = angle_mesh(32);
  for (double r : sphere_chart(Vector::Zero(3), 1.0, th)) CHECK(r == 0.0);
  // a shifted circle of the same radius
  Vector z(3);
  z << 0.0, 0.1, 0.0;
  const std::vector<double> rho = sphere_chart(z, 1.0, th);
  for (std::size_t j = 0; j < th.size(); ++j) {
    const double x = (1.0 + rho[j]) * std::cos(th[j]) - 0.1, y = (1.0 + rho[j]) * std::sin(th[j]);
    CHECK(std::hypot(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int k = 0; k < 3; ++k) {
    const std::vector<double> d = sphere_chart_derivative(Vector::Unit(3, k), 1.0, th);
    for (std::size_t j = 0; j < th.size(); ++j) {
      const double y = k == 0 ? 1.0 : (k == 1 ? std::cos(th[j]) : std::sin(th[j]));
      CHECK(std::abs(d[j] - y) < 1e-8);
    }
  }
  z << 0.0, 3.0, 0.0;
  CHECK(code_of([&] { sphere_chart(z, 1.0, th); }) == ErrorCode::InvalidRadius);
}

TEST_CASE("tangent space of the chart equals the kernel") {
  const MSConfig c;
  const MSTangentCheck t = ms_tangent_kernel_check(c);
  CHECK(t.equal);
  CHECK(t.tangent_dim == 3);
  CHECK(t.kernel_dim == 3);
  const MSTangentCheck extra = ms_tangent_kernel_check(c, {[](double th) { return std::cos(2.0 * th); }});
  CHECK_FALSE(extra.equal);
  MSConfig c2;
  c2.R = 2.0;
  c2.R_out = 40.0;
  CHECK(ms_tangent_kernel_check(c2).equal);
}

TEST_CASE("configuration validation") {
  MSConfig c;
  c.R_out = 0.5;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidRadius);
  c = MSConfig{};
  c.R = -1.0;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidRadius);
  c = MSConfig{};
  c.k_max = -1;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidArgument);
}
