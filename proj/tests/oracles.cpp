#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace oracle {

std::vector<double> charpoly(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  Matrix m = Matrix::Zero(n, n);
  const Matrix id = Matrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    m = a * m + c[k - 1] * id;
    c[k] = -(a * m).trace() / k;
  }
  return c;
}

std::vector<Complex> durand_kerner(const std::vector<double>& monic, int iterations) {
  const int n = static_cast<int>(monic.size()) - 1;
  double bound = 0.0;
  for (int i = 1; i <= n; ++i) bound = std::max(bound, std::abs(monic[i]));
  bound += 1.0;
  std::vector<Complex> z(n);
  const Complex seed(0.4, 0.9);
  for (int i = 0; i < n; ++i) z[i] = bound * std::pow(seed, i);
  auto p = [&](Complex x) {
    Complex v = 1.0;
    for (int i = 1; i <= n; ++i) v = v * x + monic[i];
    return v;
  };
  for (int it = 0; it < iterations; ++it) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      Complex den = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      const Complex step = p(z[i]) / den;
      z[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15) break;
  }
  return z;
}

double spectrum_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const Complex& x : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](Complex p, Complex q) { return std::abs(p - x) < std::abs(q - x); });
    worst = std::max(worst, std::abs(*it - x));
    b.erase(it);
  }
  return worst;
}

Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ();
}

Matrix jordan(const std::vector<std::pair<double, int>>& blocks) {
  int n = 0;
  for (const auto& b : blocks) n += b.second;
  Matrix j = Matrix::Zero(n, n);
  int off = 0;
  for (const auto& [lambda, size] : blocks) {
    for (int i = 0; i < size; ++i) {
      j(off + i, off + i) = lambda;
      if (i + 1 < size) j(off + i, off + i + 1) = 1.0;
    }
    off += size;
  }
  return j;
}

std::pair<int, int> jordan_nullities(const std::vector<std::pair<double, int>>& blocks) {
  int n1 = 0, n2 = 0;
  for (const auto& [lambda, size] : blocks) {
    if (lambda != 0.0) continue;
    n1 += 1;
    n2 += std::min(size, 2);
  }
  return {n1, n2};
}

double sampled_circle_distance(const Vector& u, int samples) {
  double best = std::numeric_limits<double>::infinity();
  Vector p = Vector::Zero(u.size());
  for (int k = 0; k < samples; ++k) {
    const double zeta = -M_PI + 2.0 * M_PI * k / (samples - 1);
    p(0) = std::sin(zeta);
    p(1) = std::cos(zeta);
    best = std::min(best, (u - p).norm());
  }
  return best;
}

std::array<double, 3> nagumo_front(double s) {
  const double c = 1.0 / std::sqrt(2.0);
  const double w = 1.0 / (1.0 + std::exp(-c * s));
  const double w1 = c * w * (1.0 - w);
  const double w2 = c * w1 * (1.0 - 2.0 * w);
  return {w, w1, w2};
}

double nagumo_speed(double a) { return (1.0 - 2.0 * a) / std::sqrt(2.0); }

std::vector<double> dirichlet_laplacian(double a, int N, double h) {
  std::vector<double> out;
  for (int k = 1; k <= N; ++k) out.push_back(a + 2.0 / (h * h) * (1.0 - std::cos(k * M_PI / (N + 1))));
  return out;
}

double harmonic_jump(int k, double R, double R_out) {
  if (k == 0) return 0.0;
  // inner (r / R)^k, outer A r^k + B r^-k with B = A R_out^{2k}, value 1 at R
  const double q = std::pow(R / R_out, 2 * k);
  const double A = 1.0 / (std::pow(R, k) * (1.0 + 1.0 / q));
  const double B = A * std::pow(R_out, 2 * k);
  const double outer = k * (A * std::pow(R, k - 1) - B * std::pow(R, -k - 1));
  const double inner = k / R;
  return outer - inner;
}

}  // namespace oracle
