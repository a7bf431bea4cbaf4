#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "normstab/driver.hpp"
#include "normstab/errors.hpp"

using namespace normstab;

namespace {

std::string config_error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  FAIL("no error raised");
  return {};
}

// u' = -u (|u|^2 - 1) in the plane
const char* kRadial = R"({
  "polynomial": {"dimension": 2, "components": [
    [{"c": 1, "p": [1, 0]}, {"c": -1, "p": [3, 0]}, {"c": -1, "p": [1, 2]}],
    [{"c": 1, "p": [0, 1]}, {"c": -1, "p": [2, 1]}, {"c": -1, "p": [0, 3]}]
  ]},
  "equilibrium": [0, 1],
  "chart": CHART
})";

std::string radial_with(const std::string& chart) {
  std::string s = kRadial;
  s.replace(s.find("CHART"), 5, chart);
  return s;
}

Json without_timestamp(Json d) {
  d["provenance"].erase("timestamp");
  return d;
}

}  // namespace

TEST_CASE("config kinds and keys") {
  CHECK(config_error_of([] { parse_config("{}"); }).find("exactly one") != std::string::npos);
  config_error_of([] { parse_config(R"({"builtin": "Ex1", "ms": {}})"); });
  config_error_of([] { parse_config(R"({"builtin": "Ex1", "colour": 1})"); });
  config_error_of([] { parse_config(R"({"builtin": "Ex9"})"); });
  config_error_of([] { parse_config(R"({"wave": {"a": 0.7}})"); });
  config_error_of([] { parse_config(R"({"ms": {"R": 2, "R_out": 1}})"); });
  config_error_of([] { parse_config(R"({"wave": {"a": 0.2}, "chart": "circle"})"); });
  CHECK(parse_config(R"({"builtin": "Ex2m1"})").kind == ConfigKind::Builtin);
  CHECK(parse_config(R"({"wave": {"a": 0.2}})").wave->a == 0.2);
  CHECK(parse_config(R"({"ms": {"R": 2, "R_out": 30}})").ms.R == 2.0);
}

TEST_CASE("syntax errors carry line and column") {
  const std::string msg = config_error_of([] { parse_config("{\n  \"builtin\": \"Ex1\",\n  oops\n}"); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);
}

TEST_CASE("tolerance overrides") {
  const ProblemConfig c = parse_config(R"({"builtin": "Ex1", "tolerances": {"tol_zero": 1e-7}})");
  CHECK(c.tolerances["tol_zero"] == 1e-7);
  CHECK(c.tolerances["gap"] == 1e-6);
  CHECK(c.tolerances.classify().spectral.tol_zero == 1e-7);
  config_error_of([] { parse_config(R"({"builtin": "Ex1", "tolerances": {"tol_zro": 1e-7}})"); });
  config_error_of([] { parse_config(R"({"builtin": "Ex1", "tolerances": {"gap": -1}})"); });
}

TEST_CASE("polynomial fields") {
  const VectorFieldSpec fs = polynomial_field(Json::parse(
      R"({"dimension": 2, "components": [[{"c": 2, "p": [2, 1]}], [{"c": -1, "p": [0, 3]}, {"c": 0.5, "p": [1, 0]}]]})"));
  Vector u(2);
  u << 0.7, -1.3;
  const Vector f = fs(u);
  CHECK(f(0) == doctest::Approx(2 * 0.49 * -1.3));
  CHECK(f(1) == doctest::Approx(1.3 * 1.3 * 1.3 + 0.35));
  CHECK((fs.jacobian(u) - fd_jacobian(fs.rhs, u)).cwiseAbs().maxCoeff() < 1e-7);
  config_error_of([] {
    polynomial_field(Json::parse(R"({"dimension": 1, "components": [[{"c": 1, "p": [7]}]]})"));
  });
  config_error_of([] {
    polynomial_field(Json::parse(R"({"dimension": 2, "components": [[{"c": 1, "p": [1]}], []]})"));
  });
  config_error_of([] { parse_config(radial_with("\"circle\"").replace(0, 1, "{\"x\": 0,")); });
}

TEST_CASE("polynomial fields with each chart kind") {
  std::ostringstream table;
  table << R"({"type": "table", "zeta_min": -0.5, "zeta_max": 0.5, "points": [)";
  for (int k = 0; k <= 40; ++k) {
    const double z = -0.5 + k / 40.0;
    char buf[2][32];
    *std::to_chars(buf[0], buf[0] + 31, std::sin(z)).ptr = 0;
    *std::to_chars(buf[1], buf[1] + 31, std::cos(z)).ptr = 0;
    table << (k ? "," : "") << "[" << buf[0] << "," << buf[1] << "]";
  }
  table << "]}";
  for (const std::string& chart : {std::string("\"circle\""), table.str()}) {
    CAPTURE(chart.substr(0, 40));
    const ProblemConfig c = parse_config(radial_with(chart));
    CHECK(c.kind == ConfigKind::Polynomial);
    CHECK(classify(c.problem.field, c.problem.chart).verdict == Verdict::NormallyStable);
  }
  const std::string affine = R"({"type": "affine", "directions": [[1, 0]], "radius": 0.5})";
  // the tangent line of the circle is not a set of equilibria
  const ProblemConfig tangent = parse_config(radial_with(affine));
  const Classification ct = classify(tangent.problem.field, tangent.problem.chart);
  CHECK(ct.verdict == Verdict::Inconclusive);
  CHECK(ct.failed_labels() == std::vector<std::string>{"(i)"});
  // x' = 0, y' = -2 (y - 1) has the line y = 1 as its equilibria
  const ProblemConfig line = parse_config(R"({
    "polynomial": {"dimension": 2, "components": [[{"c": 0, "p": [0, 0]}], [{"c": -2, "p": [0, 1]}, {"c": 2, "p": [0, 0]}]]},
    "equilibrium": [0.3, 1], "chart": )" + affine + "}");
  CHECK(classify(line.problem.field, line.problem.chart).verdict == Verdict::NormallyStable);

  config_error_of([] {
    parse_config(radial_with(R"({"type": "table", "zeta_min": -1, "zeta_max": 1,
                                 "points": [[0, 2], [0, 2], [0, 2], [0, 2], [0, 2]]})"));
  });
  config_error_of([] {
    parse_config(radial_with(R"({"type": "table", "zeta_min": -1, "zeta_max": 1,
                                 "points": [[0, 1], [0, 1], [0, 1], [0, 1]]})"));
  });
}

TEST_CASE("csv round trip is exact") {
  Series s;
  s.name = "x";
  s.columns = {"a", "b"};
  s.rows = {{0.1, 1.0 / 3.0}, {-2.5e-300, 6.02214076e23}, {std::nextafter(1.0, 2.0), NAN}};
  const std::string csv = s.to_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b");
  for (const auto& row : s.rows) {
    std::getline(in, line);
    const auto comma = line.find(',');
    double a = 0.0;
    std::from_chars(line.data(), line.data() + comma, a);
    CHECK(a == row[0]);
    const std::string b = line.substr(comma + 1);
    if (std::isnan(row[1])) {
      CHECK(b == "nan");
    } else {
      double v = 0.0;
      std::from_chars(b.data(), b.data() + b.size(), v);
      CHECK(v == row[1]);
    }
  }
}

TEST_CASE("hash vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("reports embed tolerances and provenance") {
  const std::string cfg = R"({"builtin": "Ex1"})";
  const Tolerances defaults;
  for (const char* cmd : {"classify", "ms.modes", "examples.run"}) {
    CAPTURE(cmd);
    Json params = Json::object();
    if (std::string(cmd) == "examples.run") params["name"] = "Ex1";
    const RunReport r = run_command(cmd, std::string(cmd) == "classify" ? cfg : "", params);
    CHECK(r.document["tolerances"] == defaults.to_json());
    CHECK(r.document["tolerances"].size() == 23);
    CHECK(r.document["provenance"]["version"] == version());
    CHECK(r.document["provenance"]["seed"] == 20261016);
    CHECK(r.document["series"].size() == r.series.size());
  }
  const RunReport a = run_command("classify", cfg, Json::object());
  const RunReport b = run_command("classify", cfg, Json::object());
  CHECK(without_timestamp(a.document).dump() == without_timestamp(b.document).dump());
  CHECK(a.document["provenance"]["config_hash"] == fnv1a_hex(cfg));
  CHECK(a.document["result"]["verdict"] == "NormallyStable");
}

TEST_CASE("command errors") {
  try {
    run_command("frobnicate", "", Json::object());
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
  config_error_of([] { run_command("classify", "", Json::object()); });
  config_error_of([] { run_command("simulate", R"({"builtin": "Ex1"})", Json::object()); });
  config_error_of([] { run_command("wave.find", R"({"builtin": "Ex1"})", Json::object()); });
  config_error_of([] { run_command("examples.run", "", Json{{"name", "Ex5"}}); });
}

TEST_CASE("simulate command") {
  const RunReport r = run_command("simulate", R"({"builtin": "Ex1"})",
                                  Json{{"u0", {0.5, 0.5}}, {"t_max", 20.0}, {"rho", 1.0}});
  CHECK(r.document["result"]["outcome"] == "Converged");
  REQUIRE(r.series.size() == 1);
  CHECK(r.series[0].name == "trajectory");
  CHECK(r.series[0].columns == std::vector<std::string>{"t", "u1", "u2", "dist"});
  const double ratio = r.document["result"]["rate_vs_gap"].get<double>();
  CHECK(std::abs(ratio - 1.0) < 0.1);
}
