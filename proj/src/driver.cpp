#include "normstab/driver.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "normstab/errors.hpp"

namespace normstab {

namespace {

constexpr int kMaxDegree = 6;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) config_error(where, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) config_error(where, "must be finite");
  return x;
}

int integer_at(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) config_error(where, "expected an integer");
  return j.get<int>();
}

Vector vector_at(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error(where, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = number_at(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

std::string where_key(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void check_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      config_error(where_key(where, it.key()), "unknown field");
  }
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Json parse_document(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    if (const auto p = msg.find(": ", msg.find("parse error")); p != std::string::npos) msg = msg.substr(p + 2);
    throw Error(ErrorCode::ConfigError, what + " line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": " + msg);
  }
}

// Merged view: params override keys of the config section.
Json merged(const Json& section, const Json& params, const std::vector<std::string>& skip = {}) {
  Json out = section.is_object() ? section : Json::object();
  if (params.is_object()) {
    for (auto it = params.begin(); it != params.end(); ++it) {
      if (std::find(skip.begin(), skip.end(), it.key()) != skip.end()) continue;
      out[it.key()] = it.value();
    }
  }
  return out;
}

double get_number(const Json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return number_at(obj.at(key), where_key(where, key));
}

int get_int(const Json& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return integer_at(obj.at(key), where_key(where, key));
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

struct Term {
  double c = 0.0;
  std::vector<int> p;
};

// ---------------------------------------------------------------------------
// Charts

ManifoldChart circle_through(const Vector& u_star, const std::string& where) {
  const int n = static_cast<int>(u_star.size());
  if (n < 2) config_error(where, "circle chart needs dimension >= 2");
  const double radius = std::hypot(u_star(0), u_star(1));
  if (!(radius > 0.0)) config_error(where, "circle chart needs (u_1, u_2) != 0");
  const double angle0 = std::atan2(u_star(0), u_star(1));
  ManifoldChart chart;
  chart.m = 1;
  chart.chart_radius = M_PI;
  chart.psi = [u_star, radius, angle0](const Vector& zeta) {
    Vector u = u_star;
    u(0) = radius * std::sin(angle0 + zeta(0));
    u(1) = radius * std::cos(angle0 + zeta(0));
    return u;
  };
  return chart;
}

ManifoldChart point_chart(const Vector& u_star) {
  ManifoldChart chart;
  chart.m = 0;
  chart.chart_radius = 0.0;
  chart.psi = [u_star](const Vector&) { return u_star; };
  return chart;
}

ManifoldChart affine_chart(const Json& spec, const Vector& u_star, const std::string& where) {
  check_keys(spec, {"type", "directions", "radius"}, where);
  if (!spec.contains("directions") || !spec["directions"].is_array() || spec["directions"].empty())
    config_error(where + ".directions", "expected a non-empty array of vectors");
  const Json& dirs = spec["directions"];
  Matrix d(u_star.size(), static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const std::string w = where + ".directions[" + std::to_string(j) + "]";
    const Vector v = vector_at(dirs[j], w);
    if (v.size() != u_star.size()) config_error(w, "length differs from the state dimension");
    d.col(static_cast<Eigen::Index>(j)) = v;
  }
  ManifoldChart chart;
  chart.m = static_cast<int>(d.cols());
  chart.chart_radius = get_number(spec, "radius", 1.0, where);
  if (!(chart.chart_radius > 0.0)) config_error(where + ".radius", "must be positive");
  chart.psi = [u_star, d](const Vector& zeta) { return Vector(u_star + d * zeta); };
  return chart;
}

ManifoldChart table_chart(const Json& spec, const Vector& u_star, const std::string& where) {
  check_keys(spec, {"type", "zeta_min", "zeta_max", "points"}, where);
  const double lo = get_number(spec, "zeta_min", NAN, where);
  const double hi = get_number(spec, "zeta_max", NAN, where);
  if (!(lo < 0.0 && hi > 0.0)) config_error(where, "need zeta_min < 0 < zeta_max");
  if (!spec.contains("points") || !spec["points"].is_array() || spec["points"].size() < 5)
    config_error(where + ".points", "expected at least 5 sampled points");
  const Json& pts = spec["points"];
  const int n = static_cast<int>(u_star.size());
  std::vector<std::vector<double>> comp(n, std::vector<double>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const std::string w = where + ".points[" + std::to_string(k) + "]";
    const Vector v = vector_at(pts[k], w);
    if (v.size() != n) config_error(w, "length differs from the state dimension");
    for (int i = 0; i < n; ++i) comp[i][k] = v(i);
  }
  const double step = (hi - lo) / static_cast<double>(pts.size() - 1);
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  std::vector<Spline> splines;
  for (int i = 0; i < n; ++i) splines.emplace_back(comp[i].begin(), comp[i].end(), lo, step);
  Vector offset(n);
  for (int i = 0; i < n; ++i) offset(i) = u_star(i) - splines[i](0.0);
  if (offset.norm() > 1e-6 * (1.0 + u_star.norm()))
    config_error(where, "sampled chart does not pass through the equilibrium at zeta = 0");
  ManifoldChart chart;
  chart.m = 1;
  chart.chart_radius = std::min(-lo, hi);
  chart.psi = [splines, offset, n](const Vector& zeta) {
    Vector u(n);
    for (int i = 0; i < n; ++i) u(i) = splines[i](zeta(0)) + offset(i);
    return u;
  };
  return chart;
}

// ---------------------------------------------------------------------------
// Reports

struct Context {
  const ProblemConfig* config = nullptr;
  Json params;
  std::uint64_t seed = 20261016;
};

RunReport make_report(const std::string& command, const Context& ctx, Json result,
                      std::vector<Series> series, const std::string& config_text) {
  RunReport r;
  Json& d = r.document;
  d["command"] = command;
  d["config_kind"] = ctx.config ? Json(to_string(ctx.config->kind)) : Json(nullptr);
  d["params"] = ctx.params.is_object() ? ctx.params : Json::object();
  d["result"] = std::move(result);
  d["tolerances"] = ctx.config ? ctx.config->tolerances.to_json() : Tolerances().to_json();
  Json s = Json::array();
  for (const Series& x : series) s.push_back({{"name", x.name}, {"columns", x.columns}, {"rows", x.rows.size()}});
  d["series"] = std::move(s);
  d["provenance"] = {{"version", version()},
                     {"config_hash", fnv1a_hex(config_text)},
                     {"params_hash", fnv1a_hex(d["params"].dump())},
                     {"seed", ctx.seed},
                     {"timestamp", iso_timestamp()}};
  r.series = std::move(series);
  return r;
}

Json failures_json(const Classification& c) {
  Json a = Json::array();
  for (const auto& f : c.failed) a.push_back({{"condition", f.label}, {"diagnostic", f.diagnostic}});
  return a;
}

Json classification_json(const Classification& c) {
  Json j;
  j["verdict"] = to_string(c.verdict);
  j["failed"] = failures_json(c);
  j["dims"] = {{"mc", c.mc}, {"ms", c.ms}, {"mu", c.mu}};
  j["u_star"] = to_json(c.u_star);
  j["equilibrium_residual"] = c.equilibrium_residual;
  j["a0"] = to_json(c.a0);
  Json eig = Json::array();
  for (std::size_t i = 0; i < c.spectrum.eigenvalues.size(); ++i) {
    eig.push_back({{"re", c.spectrum.eigenvalues[i].real()},
                   {"im", c.spectrum.eigenvalues[i].imag()},
                   {"group", to_string(c.spectrum.groups[i])}});
  }
  j["eigenvalues"] = std::move(eig);
  j["gap_margin"] = c.spectrum.gap_margin;
  j["spectrum_inconclusive"] = c.spectrum.inconclusive;
  j["semisimple"] = {{"semisimple", c.semisimple.semisimple},
                     {"kernel_dim", c.semisimple.kernel_dim},
                     {"margin", c.semisimple.margin}};
  j["kernel_basis"] = to_json(c.semisimple.kernel_basis);
  j["tangent"] = {{"contained", c.tangent.contained},
                  {"equal", c.tangent.equal},
                  {"m", c.tangent.m},
                  {"kernel_dim", c.tangent.kernel_dim},
                  {"angles", c.tangent.angles},
                  {"max_angle", c.tangent.max_angle}};
  return j;
}

Series eigen_series(const std::vector<Complex>& values, const std::string& name) {
  Series s{name, {"re", "im"}, {}};
  for (const Complex& z : values) s.rows.push_back({z.real(), z.imag()});
  return s;
}

const BuiltinProblem& require_ode(const Context& ctx, const std::string& command) {
  if (!ctx.config) throw Error(ErrorCode::ConfigError, command + " needs a config document");
  if (ctx.config->kind != ConfigKind::Builtin && ctx.config->kind != ConfigKind::Polynomial)
    throw Error(ErrorCode::ConfigError, command + " needs a builtin or polynomial config");
  return ctx.config->problem;
}

SpectralSplit split_at(const VectorFieldSpec& fs, const Vector& u_star, const Tolerances& tol) {
  const SquareMatrix a0(linearize(fs, u_star, tol["eps_eq"]));
  const SpectrumReport rep = eigen_decompose(a0, tol.classify().spectral);
  return spectral_projections(a0, rep, tol["eps_proj"]);
}

RunReport cmd_classify(const Context& ctx, const std::string& text) {
  const BuiltinProblem& p = require_ode(ctx, "classify");
  const Tolerances& tol = ctx.config->tolerances;
  const Classification c = classify(p.field, p.chart, tol.classify());
  Json result = classification_json(c);
  std::vector<Series> series{eigen_series(c.spectrum.eigenvalues, "eigenvalues")};
  if (c.verdict != Verdict::Inconclusive) {
    try {
      const SquareMatrix a0(c.a0);
      const SpectralSplit split = spectral_projections(a0, c.spectrum, tol["eps_proj"]);
      result["projections"] = {{"idempotence_residual", split.idempotence_residual},
                               {"completeness_residual", split.completeness_residual},
                               {"cross_residual", split.cross_residual},
                               {"commutation_residual", split.commutation_residual},
                               {"Pc", to_json(split.Pc)},
                               {"Ps", to_json(split.Ps)},
                               {"Pu", to_json(split.Pu)}};
      GraphMapOptions go;
      go.eps_newton = tol["eps_newton"];
      const double rho0 = get_number(ctx.params, "rho0", 0.25, "params");
      const GraphMap gm = solve_graph_map(p.field, c.u_star, split, rho0, go);
      Vector x = Vector::Zero(c.u_star.size());
      if (split.mc > 0) x = split.basis_c.col(0) * (0.5 * gm.rho0());
      result["graph_map"] = {{"rho0", gm.rho0()},
                             {"derivative_norm_at_0", gm.derivative_norm(Vector::Zero(c.u_star.size()))},
                             {"phi_at_half_rho0", to_json(gm.phi(x))}};
    } catch (const Error& e) {
      result["graph_map"] = {{"error", e.what()}};
    }
  }
  return make_report("classify", ctx, std::move(result), std::move(series), text);
}

Json convergence_json(const ConvergenceReport& r) {
  return {{"outcome", to_string(r.outcome)},
          {"u_inf", to_json(r.u_inf)},
          {"rate", r.rate},
          {"fit_r2", r.fit_r2},
          {"t_exit", r.t_exit},
          {"rho", r.rho},
          {"delta", r.delta},
          {"note", r.note}};
}

RunReport cmd_simulate(const Context& ctx, const std::string& text) {
  const BuiltinProblem& p = require_ode(ctx, "simulate");
  const Tolerances& tol = ctx.config->tolerances;
  if (!ctx.params.contains("u0")) config_error("params.u0", "initial state is required");
  const Vector u0 = vector_at(ctx.params["u0"], "params.u0");
  if (u0.size() != p.field.n)
    config_error("params.u0", "dimension " + std::to_string(u0.size()) + " differs from the field dimension " +
                                  std::to_string(p.field.n));
  const double t_max = get_number(ctx.params, "t_max", 20.0, "params");
  const double rho = get_number(ctx.params, "rho", 0.1, "params");
  if (!(t_max >= 0.0)) config_error("params.t_max", "must be >= 0");
  if (!(rho > 0.0)) config_error("params.rho", "must be positive");
  IntegratorOptions io = tol.integrator();
  io.sample_dt = get_number(ctx.params, "sample_dt", t_max > 0.0 ? t_max / 400.0 : 0.0, "params");
  const SimulationResult sim = simulate(p.field, p.chart, u0, t_max, rho, io, tol.convergence());

  Json result = convergence_json(sim.report);
  result["u0"] = to_json(u0);
  result["t_max"] = t_max;
  result["samples"] = sim.trajectory.size();
  result["stopped_at_exit"] = sim.trajectory.stopped_by_predicate;
  result["steps"] = {{"accepted", sim.trajectory.stats.accepted},
                     {"rejected", sim.trajectory.stats.rejected},
                     {"evaluations", sim.trajectory.stats.evaluations}};
  if (sim.report.outcome == Outcome::Converged) {
    result["limit_residual"] = p.field(sim.report.u_inf).norm();
    try {
      const SpectralSplit split = split_at(p.field, p.u_star(), tol);
      result["rate_vs_gap"] = estimate_rate_vs_gap(sim.report, split);
    } catch (const Error& e) {
      result["rate_vs_gap"] = nullptr;
      result["rate_vs_gap_note"] = e.what();
    }
  }
  Series traj{"trajectory", {"t"}, {}};
  for (int i = 0; i < p.field.n; ++i) traj.columns.push_back("u" + std::to_string(i + 1));
  traj.columns.push_back("dist");
  for (std::size_t k = 0; k < sim.trajectory.size(); ++k) {
    std::vector<double> row{sim.trajectory.times[k]};
    for (int i = 0; i < p.field.n; ++i) row.push_back(sim.trajectory.states[k](i));
    row.push_back(k < sim.report.dist_series.size() ? sim.report.dist_series[k] : NAN);
    traj.rows.push_back(std::move(row));
  }
  return make_report("simulate", ctx, std::move(result), {std::move(traj)}, text);
}

// ---------------------------------------------------------------------------
// Traveling wave

struct WaveSetup {
  WaveProblem wp;
  Json opts;
};

WaveSetup wave_setup(const Context& ctx) {
  Json section = Json::object();
  if (ctx.config) {
    if (ctx.config->kind != ConfigKind::Wave)
      throw Error(ErrorCode::ConfigError, "wave commands need a wave config");
    section = ctx.config->document["wave"];
  }
  Json o = merged(section, ctx.params);
  const double a = get_number(o, "a", 0.25, "wave");
  std::string kind = "identity";
  if (o.contains("sigma_kind")) {
    if (!o["sigma_kind"].is_string()) config_error("wave.sigma_kind", "expected a string");
    kind = o["sigma_kind"].get<std::string>();
  }
  std::vector<double> sp;
  if (o.contains("sigma_params")) {
    const Json& j = o["sigma_params"];
    if (!j.is_array()) config_error("wave.sigma_params", "expected an array");
    for (std::size_t i = 0; i < j.size(); ++i)
      sp.push_back(number_at(j[i], "wave.sigma_params[" + std::to_string(i) + "]"));
  }
  try {
    return {WaveProblem(a, Flux(kind, sp)), o};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::ConfigError, std::string("wave: ") + e.what());
    throw;
  }
}

WaveGrid grid_from(const Json& o) {
  WaveGrid g;
  g.L = get_number(o, "L", g.L, "wave");
  g.N = get_int(o, "N", g.N, "wave");
  if (!(g.L > 0.0)) config_error("wave.L", "must be positive");
  if (g.N < 10) config_error("wave.N", "must be >= 10");
  return g;
}

SpeedSearch run_find(const WaveSetup& w, const Tolerances& tol) {
  const double lo = get_number(w.opts, "V_lo", 0.0, "wave");
  const double hi = get_number(w.opts, "V_hi", 2.0, "wave");
  return find_speed(w.wp, lo, hi, tol["speed_tol"], tol.shooting());
}

const Tolerances& tolerances_of(const Context& ctx, const Tolerances& fallback) {
  return ctx.config ? ctx.config->tolerances : fallback;
}

Json speed_json(const WaveSetup& w, const SpeedSearch& s) {
  Json j{{"a", w.wp.a},
         {"sigma_kind", w.wp.flux.kind()},
         {"sigma_params", w.wp.flux.params()},
         {"V_star", s.V},
         {"bracket", {s.bracket_lo, s.bracket_hi}},
         {"iterations", s.iterations},
         {"join_mismatch", s.profile.join_mismatch},
         {"monotone", s.profile.monotone()}};
  const std::string& k = w.wp.flux.kind();
  if (k == "identity" || k == "linear") {
    const double scale = k == "linear" ? std::sqrt(w.wp.flux.params().at(0)) : 1.0;
    j["V_closed_form"] = scale * (1.0 - 2.0 * w.wp.a) / std::sqrt(2.0);
  }
  return j;
}

RunReport cmd_wave_find(const Context& ctx, const std::string& text) {
  const Tolerances fallback;
  const Tolerances& tol = tolerances_of(ctx, fallback);
  const WaveSetup w = wave_setup(ctx);
  const SpeedSearch s = run_find(w, tol);
  Json result = speed_json(w, s);
  const EnergyCheck e = energy_residual(w.wp, s.shot.path, s.V);
  result["shot_outcome"] = to_string(s.shot.outcome);
  result["energy"] = {{"max_residual", e.max_residual},
                      {"max_drift", e.max_drift},
                      {"total_increase", e.total_increase},
                      {"dissipated", e.dissipated},
                      {"F1", w.wp.F(1.0)}};
  Series prof{"profile", {"s", "w", "z"}, {}};
  for (std::size_t i = 0; i < s.profile.s().size(); ++i)
    prof.rows.push_back({s.profile.s()[i], s.profile.w_samples()[i], s.profile.z_samples()[i]});
  Series shot{"shot", {"s", "w", "z"}, {}};
  for (std::size_t i = 0; i < s.shot.path.size(); ++i)
    shot.rows.push_back({s.shot.path.times[i], s.shot.path.states[i](0), s.shot.path.states[i](1)});
  return make_report("wave.find", ctx, std::move(result), {std::move(prof), std::move(shot)}, text);
}

RunReport cmd_wave_spectrum(const Context& ctx, const std::string& text) {
  const Tolerances fallback;
  const Tolerances& tol = tolerances_of(ctx, fallback);
  const WaveSetup w = wave_setup(ctx);
  const WaveGrid grid = grid_from(w.opts);
  const SpeedSearch s = run_find(w, tol);
  const SquareMatrix A = discretize_linearization(w.wp, s.profile, grid);
  const WaveSpectrumReport r =
      wave_spectrum(A, grid, sampled_derivative(s.profile, grid), w.wp.a, tol["eps_spec"]);
  Json result = speed_json(w, s);
  const long localized = std::count(r.localized.begin(), r.localized.end(), true);
  result["spectrum"] = {{"L", r.L},
                        {"N", r.N},
                        {"zero_eigenvalue", {r.eigenvalues[r.zero_index].real(), r.eigenvalues[r.zero_index].imag()}},
                        {"zero_mode_gap", r.zero_mode_gap},
                        {"zero_mode_correlation", r.zero_mode_correlation},
                        {"stable_margin", r.stable_margin},
                        {"essential_min_re", r.essential_min_re},
                        {"essential_bound", w.wp.a - tol["eps_spec"]},
                        {"essential_bound_ok", r.essential_bound_ok},
                        {"localized_count", localized}};
  Series eig{"eigenvalues", {"re", "im", "localized"}, {}};
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
    eig.rows.push_back({r.eigenvalues[i].real(), r.eigenvalues[i].imag(), r.localized[i] ? 1.0 : 0.0});
  return make_report("wave.spectrum", ctx, std::move(result), {std::move(eig)}, text);
}

RunReport cmd_wave_simulate(const Context& ctx, const std::string& text) {
  const Tolerances fallback;
  const Tolerances& tol = tolerances_of(ctx, fallback);
  WaveSetup w = wave_setup(ctx);
  WaveGrid grid;
  grid.N = 1000;
  if (!w.opts.contains("N")) w.opts["N"] = grid.N;
  grid = grid_from(w.opts);
  PerturbationSpec v0;
  v0.amplitude = get_number(w.opts, "amplitude", v0.amplitude, "wave");
  v0.center = get_number(w.opts, "center", v0.center, "wave");
  v0.width = get_number(w.opts, "width", v0.width, "wave");
  v0.shift = get_number(w.opts, "shift", v0.shift, "wave");
  if (!(v0.width > 0.0)) config_error("wave.width", "must be positive");
  const double t_max = get_number(w.opts, "t_max", 60.0, "wave");
  const double rho = get_number(w.opts, "rho", 0.5, "wave");
  if (!(t_max > 0.0)) config_error("wave.t_max", "must be positive");
  if (!(rho > 0.0)) config_error("wave.rho", "must be positive");

  const SpeedSearch s = run_find(w, tol);
  const WaveSimulation sim = simulate_perturbation(w.wp, s.profile, grid, v0, t_max, rho);
  Json result = speed_json(w, s);
  Json conv = convergence_json(sim.report);
  conv.erase("u_inf");
  result["simulation"] = std::move(conv);
  result["simulation"]["alpha_hat"] = sim.alpha_hat;
  result["simulation"]["final_translate_residual"] = sim.residual;
  result["simulation"]["V_h"] = sim.V_h;
  result["simulation"]["front_residual"] = sim.front_residual;
  result["simulation"]["L"] = grid.L;
  result["simulation"]["N"] = grid.N;
  if (w.opts.value("gap_check", false) && sim.report.outcome == Outcome::Converged) {
    const SquareMatrix A = discretize_linearization(w.wp, s.profile, grid);
    const WaveSpectrumReport r =
        wave_spectrum(A, grid, sampled_derivative(s.profile, grid), w.wp.a, tol["eps_spec"]);
    result["simulation"]["stable_margin"] = r.stable_margin;
    result["simulation"]["rate_vs_gap"] = sim.report.rate / r.stable_margin;
  }
  Series ser{"convergence", {"t", "sup_norm", "translate_residual", "limit_distance"}, {}};
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    ser.rows.push_back({sim.times[k], sim.sup_norm[k], sim.manifold_residual[k],
                        k < sim.limit_distance.size() ? sim.limit_distance[k] : NAN});
  }
  return make_report("wave.simulate", ctx, std::move(result), {std::move(ser)}, text);
}

// ---------------------------------------------------------------------------
// Mullins-Sekerka

Json ms_options(const Context& ctx) {
  Json section = Json::object();
  if (ctx.config) {
    if (ctx.config->kind != ConfigKind::MS) throw Error(ErrorCode::ConfigError, "ms commands need an ms config");
    section = ctx.config->document["ms"];
  }
  return merged(section, ctx.params);
}

MSConfig ms_config_from(const Json& o) {
  MSConfig c;
  c.R = get_number(o, "R", c.R, "ms");
  c.R_out = get_number(o, "R_out", c.R_out, "ms");
  c.k_max = get_int(o, "k_max", c.k_max, "ms");
  c.radial_grid = get_int(o, "radial_grid", c.radial_grid, "ms");
  c.inner_depth = get_number(o, "inner_depth", c.inner_depth, "ms");
  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("ms: ") + e.what());
  }
  return c;
}

RunReport cmd_ms_symbol(const Context& ctx, const std::string& text) {
  const Json o = ms_options(ctx);
  std::vector<double> xi{0.5, 1.0, 2.0, 4.0};
  if (o.contains("xi")) {
    const Vector v = vector_at(o["xi"], "ms.xi");
    xi.assign(v.data(), v.data() + v.size());
  }
  for (double x : xi)
    if (!(x > 0.0)) config_error("ms.xi", "frequencies must be positive");
  const double H = get_number(o, "strip_height", 40.0, "ms");
  const int N = get_int(o, "intervals", 80000, "ms");
  if (!(H > 0.0)) config_error("ms.strip_height", "must be positive");
  if (N < 8) config_error("ms.intervals", "must be >= 8");
  const SymbolCheck s = flat_symbol_check(xi, H, N);
  Json rows = Json::array();
  Series ser{"symbol", {"xi", "jump", "reference", "rel_err", "coarse_rel_err"}, {}};
  for (const SymbolRow& r : s.rows) {
    rows.push_back({{"xi", r.xi}, {"jump", r.jump}, {"reference", r.reference}, {"rel_err", r.rel_err}});
    ser.rows.push_back({r.xi, r.jump, r.reference, r.rel_err, r.coarse_rel_err});
  }
  Json result{{"strip_height", H}, {"intervals", N}, {"rows", std::move(rows)},
              {"max_rel_err", s.max_rel_err}, {"observed_order", s.observed_order}};
  return make_report("ms.symbol", ctx, std::move(result), {std::move(ser)}, text);
}

Json ms_config_json(const MSConfig& c) {
  return {{"R", c.R}, {"R_out", c.R_out}, {"k_max", c.k_max}, {"radial_grid", c.radial_grid},
          {"inner_depth", c.inner_depth}, {"doubling_tol", c.doubling_tol}};
}

RunReport cmd_ms_modes(const Context& ctx, const std::string& text) {
  const Tolerances fallback;
  const Tolerances& tol = tolerances_of(ctx, fallback);
  MSConfig c = ms_config_from(ms_options(ctx));
  c.doubling_tol = tol["ms_doubling_tol"];
  const ModeEigenReport r = mode_eigenvalues(c, tol["ms_tol_zero"]);
  Json modes = Json::array();
  Series ser{"modes", {"k", "jump", "lambda", "reference"}, {}};
  for (const ModeRow& m : r.modes) {
    modes.push_back({{"k", m.k}, {"jump", m.jump}, {"lambda", m.lambda}, {"reference", m.reference}});
    ser.rows.push_back({static_cast<double>(m.k), m.jump, m.lambda, m.reference});
  }
  const MSTangentCheck t = ms_tangent_kernel_check(c, {}, 1e-6, tol["ms_tol_zero"]);
  Json result{{"config", ms_config_json(c)},
              {"modes", std::move(modes)},
              {"kernel_dim", r.kernel_dim},
              {"tol_zero", r.tol_zero},
              {"tangent", {{"equal", t.equal}, {"tangent_dim", t.tangent_dim},
                           {"kernel_dim", t.kernel_dim}, {"max_angle", t.max_angle}}}};
  return make_report("ms.modes", ctx, std::move(result), {std::move(ser)}, text);
}

RunReport cmd_ms_chart(const Context& ctx, const std::string& text) {
  const Json o = ms_options(ctx);
  const MSConfig c = ms_config_from(o);
  Vector z = Vector::Zero(3);
  if (o.contains("z")) {
    z = vector_at(o["z"], "ms.z");
    if (z.size() != 3) config_error("ms.z", "expected 3 coefficients (Y_0, Y_1, Y_2)");
  }
  const int points = get_int(o, "points", 64, "ms");
  if (points < 4) config_error("ms.points", "must be >= 4");
  const std::vector<double> theta = angle_mesh(points);
  const std::vector<double> rho = sphere_chart(z, c.R, theta);
  Series ser{"chart", {"theta", "rho", "d0", "d1", "d2"}, {}};
  std::vector<std::vector<double>> d;
  for (int j = 0; j < 3; ++j) d.push_back(sphere_chart_derivative(Vector::Unit(3, j), c.R, theta));
  double derr = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double y[3] = {1.0, std::cos(theta[i]), std::sin(theta[i])};
    for (int j = 0; j < 3; ++j) derr = std::max(derr, std::abs(d[j][i] - y[j]));
    ser.rows.push_back({theta[i], rho[i], d[0][i], d[1][i], d[2][i]});
  }
  double rmax = 0.0;
  for (double r : rho) rmax = std::max(rmax, std::abs(r));
  Json result{{"R", c.R}, {"z", to_json(z)}, {"points", points}, {"max_abs_rho", rmax},
              {"derivative_vs_harmonics", derr}};
  return make_report("ms.chart", ctx, std::move(result), {std::move(ser)}, text);
}

// ---------------------------------------------------------------------------
// Examples

Trajectory relation_run(const BuiltinProblem& p, double r0, double theta0, ExampleKind kind,
                        const Tolerances& tol, double t_max) {
  Vector u0(2);
  u0 << r0 * std::cos(theta0), r0 * std::sin(theta0);
  IntegratorOptions io = tol.integrator();
  io.max_step = 0.5;
  if (kind != ExampleKind::Ex1) {
    const double stop_band = tol["singular_band"] + 0.005;
    io.stop = [stop_band](double, const Vector& u) { return std::abs(std::hypot(u(0), u(1)) - 1.0) <= stop_band; };
  }
  Trajectory t = integrate(p.field, u0, t_max, io);
  // the stop sample may already be inside the band; drop it
  if (t.stopped_by_predicate && t.size() > 2) {
    t.times.pop_back();
    t.states.pop_back();
  }
  return t;
}

Series polar_series(const std::string& name, const Trajectory& t) {
  Series s{name, {"t", "r", "theta"}, {}};
  const std::vector<double> th = unwrapped_theta(t);
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);
  for (std::size_t k = 0; k < t.size(); k += stride)
    s.rows.push_back({t.times[k], std::hypot(t.states[k](0), t.states[k](1)), th[k]});
  return s;
}

std::string short_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

RunReport cmd_examples(const Context& ctx, const std::string& text) {
  if (!ctx.params.contains("name") || !ctx.params["name"].is_string())
    config_error("params.name", "example name is required");
  const std::string name = ctx.params["name"].get<std::string>();
  const BuiltinProblem p = builtin_problem(name);
  const Tolerances fallback;
  const Tolerances& tol = tolerances_of(ctx, fallback);
  Json result;
  result["name"] = name;
  std::vector<Series> series;

  const Classification c = classify(p.field, p.chart, tol.classify());
  result["classification"] = {{"verdict", to_string(c.verdict)},
                              {"failed", failures_json(c)},
                              {"dims", {{"mc", c.mc}, {"ms", c.ms}, {"mu", c.mu}}},
                              {"a0", to_json(c.a0)},
                              {"semisimple", c.semisimple.semisimple}};
  std::mt19937_64 rng(ctx.seed);

  if (name != "Hyperbolic3D") {
    const ExampleKind kind = name == "Ex1" ? ExampleKind::Ex1 : name == "Ex2m1" ? ExampleKind::Ex2m1 : ExampleKind::Ex2m2;
    const std::vector<double> radii = kind == ExampleKind::Ex1 ? std::vector<double>{0.5, 1.5, 2.0}
                                                               : std::vector<double>{0.5, 1.5};
    const double horizon = kind == ExampleKind::Ex1 ? 40.0 : 1e5;
    Json rel = Json::array();
    for (double r0 : radii) {
      const Trajectory t = relation_run(p, r0, 0.3, kind, tol, horizon);
      const PolarRelation pr = polar_relation_residual(t, kind, tol["singular_band"]);
      rel.push_back({{"r0", r0},
                     {"c0", pr.c0},
                     {"residual", pr.residual},
                     {"theta_change", pr.theta_change},
                     {"min_band_distance", pr.min_band_distance},
                     {"t_end", t.times.back()},
                     {"lyapunov_max_increase", lyapunov_check(t)}});
      series.push_back(polar_series("relation_r0_" + short_number(r0), t));
    }
    result["relations"] = std::move(rel);
    const Trajectory sp = relation_run(p, 1.2, 0.3, kind, tol, horizon);
    const std::vector<double> th = unwrapped_theta(sp);
    bool monotone = true;
    for (std::size_t k = 1; k < th.size(); ++k) monotone = monotone && (th[k] - th[k - 1]) * (th.back() - th.front()) >= 0.0;
    result["spiral"] = {{"r0", 1.2},
                        {"t_end", sp.times.back()},
                        {"r_end", std::hypot(sp.back()(0), sp.back()(1))},
                        {"theta_change", th.back() - th.front()},
                        {"exceeds_4pi", std::abs(th.back() - th.front()) > 4.0 * M_PI},
                        {"monotone", monotone}};
  }

  SweepSettings ss;
  ss.integrator = tol.integrator();
  ss.integrator.sample_dt = 0.05;
  ss.convergence = tol.convergence();
  std::vector<SweepStart> starts;
  if (name == "Ex1") {
    const double delta = get_number(ctx.params, "delta", 1e-3, "params");
    const int count = get_int(ctx.params, "count", 32, "params");
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI / count)(rng);
    starts = ex1_sweep_starts(count, delta, phase);
    result["sweep"] = {{"delta", delta}, {"count", count}, {"phase", phase}};
  } else if (name == "Hyperbolic3D") {
    const double delta = get_number(ctx.params, "delta", 0.02, "params");
    const int count = get_int(ctx.params, "count", 64, "params");
    starts = hyperbolic_sweep_starts(count, delta, rng());
    result["sweep"] = {{"delta", delta}, {"count", count}, {"min_radial_offset", 1e-3}};
  }
  if (!starts.empty()) {
    ss.t_max = get_number(ctx.params, "t_max", ss.t_max, "params");
    ss.rho = get_number(ctx.params, "rho", ss.rho, "params");
    const std::vector<SweepRun> runs = run_sweep(p, starts, ss);
    const SpectralSplit split = split_at(p.field, p.u_star(), tol);
    int converged = 0, left = 0, undetermined = 0, failed = 0;
    Series sw{"sweep", {"index"}, {}};
    for (int i = 0; i < p.field.n; ++i) sw.columns.push_back("u0_" + std::to_string(i + 1));
    for (const char* col : {"on_stable_slice", "outcome", "rate", "fit_r2", "t_exit", "rate_vs_gap", "r_inf"})
      sw.columns.push_back(col);
    double worst_r = 0.0, ratio_lo = INFINITY, ratio_hi = -INFINITY;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const SweepRun& r = runs[k];
      double ratio = NAN, r_inf = NAN;
      double code = 3.0;
      if (!r.error.empty()) {
        ++failed;
      } else if (r.report.outcome == Outcome::Converged) {
        ++converged;
        code = 0.0;
        r_inf = std::hypot(r.report.u_inf(0), r.report.u_inf(1));
        worst_r = std::max(worst_r, std::abs(r_inf - 1.0));
        if (split.ms > 0) {
          ratio = estimate_rate_vs_gap(r.report, split);
          ratio_lo = std::min(ratio_lo, ratio);
          ratio_hi = std::max(ratio_hi, ratio);
        }
      } else if (r.report.outcome == Outcome::LeftNeighborhood) {
        ++left;
        code = 1.0;
      } else {
        ++undetermined;
        code = 2.0;
      }
      std::vector<double> row{static_cast<double>(k)};
      for (int i = 0; i < p.field.n; ++i) row.push_back(r.start.u0(i));
      row.insert(row.end(), {r.start.on_stable_slice ? 1.0 : 0.0, code, r.report.rate, r.report.fit_r2,
                             r.report.t_exit, ratio, r_inf});
      sw.rows.push_back(std::move(row));
    }
    Json& j = result["sweep"];
    j["t_max"] = ss.t_max;
    j["rho"] = ss.rho;
    j["converged"] = converged;
    j["left_neighborhood"] = left;
    j["undetermined"] = undetermined;
    j["failed"] = failed;
    j["max_abs_r_inf_minus_1"] = worst_r;
    if (ratio_lo <= ratio_hi) j["rate_vs_gap_range"] = {ratio_lo, ratio_hi};
    j["outcome_codes"] = "0 Converged, 1 LeftNeighborhood, 2 Undetermined, 3 error";
    series.push_back(std::move(sw));
  }
  return make_report("examples.run", ctx, std::move(result), std::move(series), text);
}

}  // namespace

// ---------------------------------------------------------------------------

Tolerances::Tolerances()
    : values_{{"tol_zero", 1e-9},         {"gap", 1e-6},
              {"eps_eq", 1e-9},           {"tangent_tol", 1e-6},
              {"rank_tol", 1e-8},         {"eps_proj", kProjectionTolerance},
              {"eps_newton", 1e-11},      {"integrator_rtol", 1e-12},
              {"integrator_atol", 1e-12}, {"fit_fraction", 0.3},
              {"min_fit_samples", 20},    {"min_r2", 0.98},
              {"limit_eps_eq", 1e-8},     {"noise_floor", 1e-11},
              {"stationary_tol", 1e-9},   {"singular_band", kSingularBand},
              {"eps_launch", 1e-6},       {"eps_connect", 1e-4},
              {"shoot_tol", 1e-12},       {"speed_tol", 1e-12},
              {"eps_spec", 0.05},         {"ms_tol_zero", 1e-6},
              {"ms_doubling_tol", 1e-3}} {}

void Tolerances::apply(const Json& overrides, const std::string& where) {
  if (!overrides.is_object()) config_error(where, "expected an object of named tolerances");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    const std::string w = where + "." + it.key();
    auto slot = values_.find(it.key());
    if (slot == values_.end()) config_error(w, "unknown tolerance");
    const double x = number_at(it.value(), w);
    if (!(x > 0.0)) config_error(w, "must be positive");
    if ((it.key() == "fit_fraction" || it.key() == "min_r2") && x > 1.0) config_error(w, "must be <= 1");
    if (it.key() == "min_fit_samples" && (x != std::floor(x) || x < 2.0))
      config_error(w, "must be an integer >= 2");
    slot->second = x;
  }
}

double Tolerances::operator[](const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorCode::InvalidArgument, "unknown tolerance " + name);
  return it->second;
}

Json Tolerances::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

ClassifyTolerances Tolerances::classify() const {
  ClassifyTolerances t;
  t.spectral.tol_zero = (*this)["tol_zero"];
  t.spectral.gap = (*this)["gap"];
  t.eps_eq = (*this)["eps_eq"];
  t.tangent_tol = (*this)["tangent_tol"];
  t.rank_tol = (*this)["rank_tol"];
  return t;
}

IntegratorOptions Tolerances::integrator() const {
  IntegratorOptions o;
  o.rtol = (*this)["integrator_rtol"];
  o.atol = (*this)["integrator_atol"];
  return o;
}

ConvergenceOptions Tolerances::convergence() const {
  ConvergenceOptions o;
  o.fit_fraction = (*this)["fit_fraction"];
  o.min_fit_samples = static_cast<int>((*this)["min_fit_samples"]);
  o.min_r2 = (*this)["min_r2"];
  o.eps_eq = (*this)["limit_eps_eq"];
  o.noise_floor = (*this)["noise_floor"];
  o.stationary_tol = (*this)["stationary_tol"];
  return o;
}

ShootOptions Tolerances::shooting() const {
  ShootOptions o;
  o.eps_launch = (*this)["eps_launch"];
  o.eps_connect = (*this)["eps_connect"];
  o.tol = (*this)["shoot_tol"];
  return o;
}

const char* to_string(ConfigKind kind) noexcept {
  switch (kind) {
    case ConfigKind::Builtin: return "builtin";
    case ConfigKind::Polynomial: return "polynomial";
    case ConfigKind::Wave: return "wave";
    case ConfigKind::MS: return "ms";
  }
  return "?";
}

VectorFieldSpec polynomial_field(const Json& spec, const std::string& where) {
  if (!spec.is_object()) config_error(where, "expected an object");
  check_keys(spec, {"dimension", "components"}, where);
  if (!spec.contains("dimension")) config_error(where + ".dimension", "required");
  const int n = integer_at(spec["dimension"], where + ".dimension");
  if (n < 1 || n > 64) config_error(where + ".dimension", "must be in 1..64");
  if (!spec.contains("components") || !spec["components"].is_array() ||
      static_cast<int>(spec["components"].size()) != n)
    config_error(where + ".components", "expected one term list per component");
  std::vector<std::vector<Term>> comps(n);
  for (int i = 0; i < n; ++i) {
    const std::string wi = where + ".components[" + std::to_string(i) + "]";
    const Json& terms = spec["components"][i];
    if (!terms.is_array()) config_error(wi, "expected an array of terms");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string wt = wi + "[" + std::to_string(t) + "]";
      const Json& term = terms[t];
      if (!term.is_object()) config_error(wt, "expected {\"c\": coefficient, \"p\": exponents}");
      check_keys(term, {"c", "p"}, wt);
      if (!term.contains("c") || !term.contains("p")) config_error(wt, "needs both c and p");
      Term tm;
      tm.c = number_at(term["c"], wt + ".c");
      const Json& p = term["p"];
      if (!p.is_array() || static_cast<int>(p.size()) != n)
        config_error(wt + ".p", "expected " + std::to_string(n) + " exponents");
      int degree = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const int e = integer_at(p[k], wt + ".p[" + std::to_string(k) + "]");
        if (e < 0) config_error(wt + ".p[" + std::to_string(k) + "]", "exponents must be >= 0");
        tm.p.push_back(e);
        degree += e;
      }
      if (degree > kMaxDegree)
        config_error(wt + ".p", "total degree " + std::to_string(degree) + " exceeds " + std::to_string(kMaxDegree));
      comps[i].push_back(std::move(tm));
    }
  }
  VectorFieldSpec fs;
  fs.n = n;
  fs.center = Vector::Zero(n);
  fs.name = "polynomial";
  fs.rhs = [comps, n](const Vector& u) {
    Vector f = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      for (const Term& t : comps[i]) {
        double v = t.c;
        for (int k = 0; k < n; ++k) v *= ipow(u(k), t.p[k]);
        f(i) += v;
      }
    }
    return f;
  };
  fs.jacobian = [comps, n](const Vector& u) {
    Matrix J = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (const Term& t : comps[i]) {
        for (int j = 0; j < n; ++j) {
          if (t.p[j] == 0) continue;
          double v = t.c * t.p[j] * ipow(u(j), t.p[j] - 1);
          for (int k = 0; k < n; ++k)
            if (k != j) v *= ipow(u(k), t.p[k]);
          J(i, j) += v;
        }
      }
    }
    return J;
  };
  return fs;
}

ManifoldChart chart_from_json(const Json& spec, const Vector& u_star, const std::string& where) {
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (s == "circle") return circle_through(u_star, where);
    if (s == "point") return point_chart(u_star);
    config_error(where, "unknown chart '" + s + "' (circle, point, or an affine/table object)");
  }
  if (!spec.is_object() || !spec.contains("type") || !spec["type"].is_string())
    config_error(where, "expected \"circle\", \"point\" or an object with a type");
  const std::string type = spec["type"].get<std::string>();
  if (type == "affine") return affine_chart(spec, u_star, where);
  if (type == "table") return table_chart(spec, u_star, where);
  config_error(where + ".type", "unknown chart type '" + type + "'");
}

ProblemConfig parse_config(const std::string& text) {
  ProblemConfig cfg;
  cfg.document = parse_document(text, "config");
  const Json& d = cfg.document;
  if (!d.is_object()) config_error("config", "top level must be an object");
  check_keys(d, {"builtin", "polynomial", "wave", "ms", "equilibrium", "chart", "tolerances", "name", "description"},
             "");
  int kinds = 0;
  for (const char* k : {"builtin", "polynomial", "wave", "ms"}) kinds += d.contains(k) ? 1 : 0;
  if (kinds != 1) config_error("config", "exactly one of builtin, polynomial, wave, ms must be present");
  if (d.contains("tolerances")) cfg.tolerances.apply(d["tolerances"]);

  if (d.contains("builtin") || d.contains("polynomial")) {
    Vector u_star;
    if (d.contains("builtin")) {
      cfg.kind = ConfigKind::Builtin;
      if (!d["builtin"].is_string()) config_error("builtin", "expected a name");
      cfg.builtin = d["builtin"].get<std::string>();
      cfg.problem = builtin_problem(cfg.builtin);
      u_star = cfg.problem.u_star();
    } else {
      cfg.kind = ConfigKind::Polynomial;
      cfg.problem.field = polynomial_field(d["polynomial"]);
      if (!d.contains("equilibrium")) config_error("equilibrium", "required for polynomial fields");
    }
    if (d.contains("equilibrium")) {
      u_star = vector_at(d["equilibrium"], "equilibrium");
      if (u_star.size() != cfg.problem.field.n)
        config_error("equilibrium", "dimension differs from the field dimension " +
                                        std::to_string(cfg.problem.field.n));
    }
    if (d.contains("chart")) {
      cfg.problem.chart = chart_from_json(d["chart"], u_star);
    } else if (cfg.kind == ConfigKind::Polynomial) {
      config_error("chart", "required for polynomial fields");
    } else if (d.contains("equilibrium")) {
      cfg.problem.chart = circle_through(u_star, "chart");
    }
  } else {
    for (const char* k : {"equilibrium", "chart"})
      if (d.contains(k)) config_error(k, "only used with builtin or polynomial fields");
  }
  if (d.contains("wave")) {
    cfg.kind = ConfigKind::Wave;
    const Json& w = d["wave"];
    if (!w.is_object()) config_error("wave", "expected an object");
    check_keys(w, {"a", "sigma_kind", "sigma_params", "L", "N", "t_max", "rho", "amplitude", "center", "width",
                   "shift", "V_lo", "V_hi", "gap_check"},
               "wave");
    Context ctx;
    ctx.config = &cfg;
    cfg.wave = wave_setup(ctx).wp;
    cfg.wave_params = w;
  }
  if (d.contains("ms")) {
    cfg.kind = ConfigKind::MS;
    const Json& m = d["ms"];
    if (!m.is_object()) config_error("ms", "expected an object");
    check_keys(m, {"R", "R_out", "k_max", "radial_grid", "inner_depth", "xi", "strip_height", "intervals", "z",
                   "points"},
               "ms");
    cfg.ms = ms_config_from(m);
  }
  return cfg;
}

std::string Series::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (std::isnan(row[i])) {
        out += "nan";
        continue;
      }
      const auto res = std::to_chars(buf, buf + sizeof buf, row[i]);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* version() noexcept { return NORMSTAB_VERSION; }

std::vector<std::string> available_commands() {
  return {"classify", "simulate", "wave.find", "wave.spectrum", "wave.simulate",
          "ms.symbol", "ms.modes", "ms.chart", "examples.run"};
}

RunReport run_command(const std::string& command, const std::string& config_text, const Json& params) {
  Context ctx;
  ctx.params = params.is_null() ? Json::object() : params;
  if (!ctx.params.is_object()) config_error("params", "expected an object");
  if (ctx.params.contains("seed")) {
    const Json& s = ctx.params["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      config_error("params.seed", "expected a non-negative integer");
    ctx.seed = s.get<std::uint64_t>();
  }
  std::optional<ProblemConfig> cfg;
  if (!config_text.empty()) {
    cfg = parse_config(config_text);
    ctx.config = &*cfg;
  }
  if (command == "classify") return cmd_classify(ctx, config_text);
  if (command == "simulate") return cmd_simulate(ctx, config_text);
  if (command == "wave.find") return cmd_wave_find(ctx, config_text);
  if (command == "wave.spectrum") return cmd_wave_spectrum(ctx, config_text);
  if (command == "wave.simulate") return cmd_wave_simulate(ctx, config_text);
  if (command == "ms.symbol") return cmd_ms_symbol(ctx, config_text);
  if (command == "ms.modes") return cmd_ms_modes(ctx, config_text);
  if (command == "ms.chart") return cmd_ms_chart(ctx, config_text);
  if (command == "examples.run") return cmd_examples(ctx, config_text);
  throw Error(ErrorCode::ConfigError, "unknown command '" + command + "'");
}

}  // namespace normstab
