// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "normstab/errors.hpp"
#include "normstab/examples_ode.hpp"
#include "normstab/mullins_sekerka.hpp"
#include "normstab/wave.hpp"
#include "oracles.hpp"

using namespace normstab;

namespace {

constexpr std::uint64_t kSeed = 20261016;

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> body;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

SpectralSplit split_of(const BuiltinProblem& p) {
  const SquareMatrix a0(linearize(p.field, p.u_star()));
  return spectral_projections(a0, eigen_decompose(a0));
}

Trajectory polar_run(ExampleKind kind, double r0, double t_max, double band_stop) {
  const BuiltinProblem p = example_field(kind);
  Vector u0(2);
  u0 << r0 * std::cos(0.3), r0 * std::sin(0.3);
  IntegratorOptions o;
  o.rtol = o.atol = 1e-12;
  o.max_step = 0.5;
  if (band_stop > 0.0) o.stop = [band_stop](double, const Vector& u) { return std::abs(u.norm() - 1.0) <= band_stop; };
  Trajectory t = integrate(p.field, u0, t_max, o);
  if (t.stopped_by_predicate) {
    t.times.pop_back();
    t.states.pop_back();
  }
  return t;
}

void example_matrices(Check& o) {
  const Vector us = builtin_problem("Ex1").u_star();
  const std::pair<ExampleKind, Matrix> cases[] = {{ExampleKind::Ex1, mat2(0, 1, 0, 1)},
                                                  {ExampleKind::Ex2m1, mat2(0, 1, 0, 0)},
                                                  {ExampleKind::Ex2m2, mat2(0, 0, 0, 0)}};
  const bool expected[] = {true, false, true};
  double worst = 0.0;
  std::string ss;
  for (int i = 0; i < 3; ++i) {
    const SquareMatrix a0(linearize(example_field(cases[i].first).field, us));
    worst = std::max(worst, (a0.entries() - cases[i].second).cwiseAbs().maxCoeff());
    const bool s = semisimple_zero(a0).semisimple;
    ss += s ? "T" : "F";
    o.require(s == expected[i], "semisimple " + std::to_string(i));
  }
  o.require(worst <= 1e-10, "A0 error");
  o.detail << "max |A0 - exact| = " << fmt(worst) << " (tol 1e-10); semisimple = " << ss << " (expect TFT)";
}

void verdicts(Check& o) {
  struct Want {
    const char* name;
    Verdict v;
    std::vector<std::string> failed;
  };
  for (const Want& w : {Want{"Ex1", Verdict::NormallyStable, {}}, Want{"Ex2m1", Verdict::Inconclusive, {"(iii)"}},
                        Want{"Ex2m2", Verdict::Inconclusive, {"(ii)"}},
                        Want{"Hyperbolic3D", Verdict::NormallyHyperbolic, {}}}) {
    const BuiltinProblem p = builtin_problem(w.name);
    const Classification c = classify(p.field, p.chart);
    o.require(c.verdict == w.v && c.failed_labels() == w.failed, w.name);
    o.detail << w.name << "=" << to_string(c.verdict);
    for (const auto& f : c.failed_labels()) o.detail << f;
    if (c.verdict == Verdict::NormallyHyperbolic) {
      o.require(c.mc == 1 && c.ms == 1 && c.mu == 1, "dims");
      o.detail << "(" << c.mc << "," << c.ms << "," << c.mu << ")";
    }
    o.detail << " ";
  }
  o.detail << "(exact match)";
}

void relations(Check& o) {
  double ex1 = 0.0, ex2 = 0.0, band = INFINITY;
  for (double r0 : {0.5, 1.5, 2.0}) ex1 = std::max(ex1, polar_relation_residual(polar_run(ExampleKind::Ex1, r0, 40.0, 0.0), ExampleKind::Ex1).residual);
  for (ExampleKind k : {ExampleKind::Ex2m1, ExampleKind::Ex2m2}) {
    for (double r0 : {0.5, 1.5}) {
      const PolarRelation pr = polar_relation_residual(polar_run(k, r0, 1e5, kSingularBand + 0.005), k);
      ex2 = std::max(ex2, pr.residual);
      band = std::min(band, pr.min_band_distance);
    }
  }
  o.require(ex1 <= 1e-3, "Ex1 relation");
  o.require(ex2 <= 1e-2, "Ex2 relations");
  o.require(band >= kSingularBand, "band");
  o.detail << "Ex1 max residual " << fmt(ex1) << " (tol 1e-3); Ex2m1/Ex2m2 max residual " << fmt(ex2)
           << " (tol 1e-2) with min |r-1| " << fmt(band) << " >= 0.02";
}

void ex1_sweep(Check& o) {
  const BuiltinProblem p = builtin_problem("Ex1");
  std::mt19937_64 rng(kSeed);
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI / 32)(rng);
  const SpectralSplit split = split_of(p);
  int converged = 0;
  double worst_r = 0.0, lo = INFINITY, hi = -INFINITY;
  for (const SweepRun& r : run_sweep(p, ex1_sweep_starts(32, 1e-3, phase), SweepSettings{})) {
    if (!r.error.empty() || r.report.outcome != Outcome::Converged) continue;
    ++converged;
    worst_r = std::max(worst_r, std::abs(r.report.u_inf.norm() - 1.0));
    const double ratio = estimate_rate_vs_gap(r.report, split);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  o.require(converged == 32, "converged");
  o.require(worst_r <= 1e-6, "r_inf");
  o.require(lo >= 0.8 && hi <= 1.2, "rate/gap");
  o.detail << converged << "/32 Converged; max |r_inf-1| " << fmt(worst_r) << " (tol 1e-6); rate/gap in ["
           << fmt(lo) << ", " << fmt(hi) << "] (need [0.8, 1.2])";
}

void dichotomy(Check& o) {
  const BuiltinProblem p = builtin_problem("Hyperbolic3D");
  int conv = 0, left = 0, undet = 0, slice_conv = 0, slice = 0, errors = 0;
  for (const SweepRun& r : run_sweep(p, hyperbolic_sweep_starts(64, 0.02, kSeed), SweepSettings{})) {
    if (!r.error.empty()) {
      ++errors;
      continue;
    }
    conv += r.report.outcome == Outcome::Converged;
    left += r.report.outcome == Outcome::LeftNeighborhood;
    undet += r.report.outcome == Outcome::Undetermined;
    if (r.start.on_stable_slice) {
      ++slice;
      slice_conv += r.report.outcome == Outcome::Converged;
    }
  }
  o.require(undet == 0 && errors == 0, "undetermined");
  o.require(slice > 0 && slice_conv == slice, "stable slice");
  o.detail << "64 starts, delta 0.02: " << conv << " Converged, " << left << " LeftNeighborhood, " << undet
           << " Undetermined, " << errors << " errors; stable slice " << slice_conv << "/" << slice << " Converged";
}

void wave_speed(Check& o) {
  double oracle_res = 0.0, worst = 0.0;
  for (double a : {0.1, 0.25, 0.4}) {
    const double V = oracle::nagumo_speed(a);
    for (double s = -20.0; s <= 20.0; s += 0.37) {
      const auto [w, w1, w2] = oracle::nagumo_front(s);
      oracle_res = std::max(oracle_res, std::abs(w2 - V * w1 + w * (1.0 - w) * (w - a)));
    }
    worst = std::max(worst, std::abs(find_speed(WaveProblem(a, Flux("identity"))).V - V));
  }
  o.require(oracle_res < 1e-12, "closed-form oracle");
  o.require(worst <= 1e-4, "speed");
  o.detail << "closed-form substitution residual " << fmt(oracle_res) << "; max |V* - (1-2a)/sqrt2| over a in {0.1,0.25,0.4} "
           << fmt(worst) << " (tol 1e-4)";
}

const SpeedSearch& quarter_front() {
  static const SpeedSearch s = find_speed(WaveProblem(0.25, Flux("identity")));
  return s;
}

void energy(Check& o) {
  const WaveProblem wp(0.25, Flux("identity"));
  const SpeedSearch& s = quarter_front();
  double worst = 0.0;
  int paths = 0;
  for (double V : {0.0, 0.1, 0.2, 0.3, s.V, 0.5, 1.0, 2.0}) {
    const ShotResult shot = V == s.V ? s.shot : shoot(wp, V);
    worst = std::max(worst, energy_residual(wp, shot.path, V).max_residual);
    ++paths;
  }
  const double drift = energy_residual(wp, shoot(wp, 0.0).path, 0.0).max_drift;
  o.require(worst <= 1e-6, "residual");
  o.require(drift <= 1e-8, "V = 0 drift");
  o.detail << paths << " shooting paths at a = 0.25: max residual " << fmt(worst) << " (tol 1e-6); V = 0 drift of G + F "
           << fmt(drift) << " (tol 1e-8)";
}

void wave_spectrum_check(Check& o) {
  const WaveProblem wp(0.25, Flux("identity"));
  WaveGrid g;
  g.L = 40.0;
  g.N = 2000;
  const SquareMatrix A = discretize_linearization(wp, quarter_front().profile, g);
  const WaveSpectrumReport r = wave_spectrum(A, g, sampled_derivative(quarter_front().profile, g), wp.a);
  o.require(r.zero_mode_gap <= 1e-3, "zero mode");
  o.require(r.zero_mode_correlation >= 0.999, "correlation");
  o.require(r.stable_margin > 0.0, "margin");
  o.require(r.essential_min_re >= wp.a - 0.05, "essential");
  o.detail << "L 40, N 2000: zero_mode_gap " << fmt(r.zero_mode_gap) << " (tol 1e-3); correlation "
           << r.zero_mode_correlation << " (>= 0.999); stable_margin " << fmt(r.stable_margin)
           << " (> 0); min Re non-localized " << fmt(r.essential_min_re) << " (>= 0.2)";
}

void wave_translate(Check& o) {
  const WaveProblem wp(0.25, Flux("identity"));
  WaveGrid g;
  g.L = 40.0;
  g.N = 2000;
  const WaveSimulation s = simulate_perturbation(wp, quarter_front().profile, g, PerturbationSpec{}, 60.0);
  o.require(s.report.outcome == Outcome::Converged, "outcome");
  o.require(s.residual <= 1e-4, "residual");
  o.require(s.report.fit_r2 >= 0.98, "r2");
  o.detail << "N 2000, t_max 60, amplitude 0.01: " << to_string(s.report.outcome) << "; residual " << fmt(s.residual)
           << " (tol 1e-4); fit r2 " << s.report.fit_r2 << " (>= 0.98); alpha " << fmt(s.alpha_hat) << "; rate "
           << fmt(s.report.rate);
}

void ms_symbol(Check& o) {
  const SymbolCheck s = flat_symbol_check({0.5, 1.0, 2.0, 4.0}, 40.0, 80000);
  o.require(s.max_rel_err <= 1e-3, "error");
  o.require(s.observed_order >= 1.8 && s.observed_order <= 2.2, "order");
  o.detail << "max rel err " << fmt(s.max_rel_err) << " (tol 1e-3); observed order " << fmt(s.observed_order)
           << " (need [1.8, 2.2])";
}

void ms_kernel(Check& o) {
  MSConfig c;
  c.R = 1.0;
  c.R_out = 20.0;
  double oracle_err = 0.0, bvp_err = 0.0;
  for (int k = 2; k <= 6; ++k) {
    const double ref = l_mode_reference(k, c.R);
    oracle_err = std::max(oracle_err, std::abs(-oracle::harmonic_jump(k, c.R, c.R_out) * a_sigma_mode(k, c.R) / ref - 1.0));
  }
  for (int k = 0; k <= 6; ++k) {
    const double h = oracle::harmonic_jump(k, c.R, c.R_out);
    bvp_err = std::max(bvp_err, std::abs(dtn_jump_mode(k, c) - h) / (1.0 + std::abs(h)));
  }
  const ModeEigenReport r = mode_eigenvalues(c);
  double worst = 0.0;
  for (int k = 2; k <= 6; ++k) worst = std::max(worst, std::abs(r.modes[k].lambda / r.modes[k].reference - 1.0));
  const double l0 = std::abs(r.modes[0].lambda), l1 = std::abs(r.modes[1].lambda);
  o.require(oracle_err <= 0.01, "reference vs harmonic oracle");
  o.require(bvp_err <= 1e-4, "radial BVP vs oracle");
  o.require(l0 <= 1e-6 && l1 <= 1e-6, "lambda0/1");
  o.require(r.kernel_dim == 3, "kernel_dim");
  o.require(worst <= 0.01, "lambda_k");
  o.detail << "|lambda0| " << fmt(l0) << ", |lambda1| " << fmt(l1) << " (tol 1e-6); kernel_dim " << r.kernel_dim
           << " (= 3); max rel dev k=2..6 " << fmt(worst) << " (tol 1%); oracle checks " << fmt(oracle_err) << ", "
           << fmt(bvp_err);
}

void invariants(Check& o) {
  constexpr double eps_proj = 1e-8, eps_roundtrip = 1e-10, eps_eq = 1e-9, eps_graph = 1e-8;
  double proj = 0.0, trip = 0.0, tr = 0.0, graph = 0.0;
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const char* name : {"Ex1", "Ex2m1", "Ex2m2", "Hyperbolic3D"}) {
    const BuiltinProblem p = builtin_problem(name);
    const int n = p.field.n;
    const SpectralSplit split = split_of(p);
    proj = std::max({proj, split.idempotence_residual, split.commutation_residual, split.completeness_residual,
                     split.cross_residual});
    const GraphMap gm = solve_graph_map(p.field, p.u_star(), split, 0.25);
    for (int k = 0; k < 40; ++k) {
      Vector v = Vector::NullaryExpr(n, [&] { return gm.rho0() * U(rng); });
      const double xc_norm = (split.Pc * v).norm();
      if (xc_norm > 0.9 * gm.rho0()) v *= 0.9 * gm.rho0() / xc_norm;
      const NormalCoords nc = to_normal_form(v, gm);
      trip = std::max(trip, (from_normal_form(nc, gm) - v).norm());
      const NormalFormRhs r = normal_form_rhs({nc.x, Vector::Zero(n), Vector::Zero(n)}, gm);
      tr = std::max(tr, r.T.norm() + r.R_s.norm() + r.R_u.norm());
      const Vector w = p.chart.at(Vector::Constant(1, 0.4 * gm.rho0() * U(rng))) - p.u_star();
      const Vector xc = split.Pc * w;
      if (xc.norm() < gm.rho0()) graph = std::max(graph, (split.Psu() * w - gm.phi(xc)).norm());
    }
  }
  o.require(proj <= eps_proj, "projections");
  o.require(trip <= eps_roundtrip, "roundtrip");
  o.require(tr <= eps_eq, "T/R");
  o.require(graph <= eps_graph, "on-graph");
  o.detail << "4 builtins: projection residuals " << fmt(proj) << " (tol 1e-8); roundtrip " << fmt(trip)
           << " (tol 1e-10); |T(x,0)|+|R(x,0)| " << fmt(tr) << " (tol 1e-9); on-graph " << fmt(graph)
           << " (tol 1e-8)";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "example matrices", 1.0, example_matrices},
      {2, "classification verdicts", 1.0, verdicts},
      {3, "trajectory relations", 10.0, relations},
      {4, "convergence and rate", 30.0, ex1_sweep},
      {5, "dichotomy", 60.0, dichotomy},
      {6, "wave speed", 30.0, wave_speed},
      {7, "energy identity", 5.0, energy},
      {8, "wave spectrum", 60.0, wave_spectrum_check},
      {9, "convergence to a translate", 120.0, wave_translate},
      {10, "symbol", 10.0, ms_symbol},
      {11, "Mullins-Sekerka kernel", 10.0, ms_kernel},
      {12, "structural invariants", 30.0, invariants},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Check o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) o.require(false, "runtime");
    failed += !o.pass;
    std::printf("%s %2d %-28s %s [%.2f s / %.0f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(),
                secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
