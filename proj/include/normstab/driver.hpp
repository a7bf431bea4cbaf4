#pragma once

// Configuration documents, the command dispatcher behind the CLI and the C
// API, and the report format (JSON document plus CSV series).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "normstab/examples_ode.hpp"
#include "normstab/mullins_sekerka.hpp"
#include "normstab/wave.hpp"

namespace normstab {

using Json = nlohmann::ordered_json;

/// Named tolerances with their defaults. Every report embeds the resolved set.
class Tolerances {
 public:
  Tolerances();
  /// Overrides from a config object. Throws Error(ConfigError) on unknown
  /// names or non-positive values.
  void apply(const Json& overrides, const std::string& where = "tolerances");

  double operator[](const std::string& name) const;
  Json to_json() const;

  ClassifyTolerances classify() const;
  IntegratorOptions integrator() const;
  ConvergenceOptions convergence() const;
  ShootOptions shooting() const;

 private:
  std::map<std::string, double> values_;
};

enum class ConfigKind { Builtin, Polynomial, Wave, MS };

const char* to_string(ConfigKind kind) noexcept;

struct ProblemConfig {
  ConfigKind kind = ConfigKind::Builtin;
  std::string builtin;           ///< builtin name when kind == Builtin
  BuiltinProblem problem;        ///< field and chart for Builtin / Polynomial
  std::optional<WaveProblem> wave;
  Json wave_params;              ///< remaining keys of the "wave" object
  MSConfig ms;
  Tolerances tolerances;
  Json document;
};

/// Parses and validates a configuration document. Throws Error(ConfigError)
/// with line/column for syntax errors and a field path for semantic ones.
ProblemConfig parse_config(const std::string& text);

/// Polynomial field from {"dimension": n, "components": [[{"c": .., "p": [..]}, ..], ..]}.
VectorFieldSpec polynomial_field(const Json& spec, const std::string& where = "polynomial");

/// Chart from "circle", "point", {"type": "affine", ...} or {"type": "table", ...}
/// passing through u_star.
ManifoldChart chart_from_json(const Json& spec, const Vector& u_star, const std::string& where = "chart");

struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Header row, '.' decimals, shortest round-trip digits.
  std::string to_csv() const;
};

struct RunReport {
  Json document;
  std::vector<Series> series;

  std::string to_json(int indent = 2) const { return document.dump(indent); }
};

/// FNV-1a 64-bit, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

const char* version() noexcept;

/// Commands: classify, simulate, wave.find, wave.spectrum, wave.simulate,
/// ms.symbol, ms.modes, ms.chart, examples.run. `config_text` may be empty
/// for the wave, ms and examples commands. Params override config values.
RunReport run_command(const std::string& command, const std::string& config_text,
                      const Json& params);

std::vector<std::string> available_commands();

}  // namespace normstab
