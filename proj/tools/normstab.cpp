#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "normstab/normstab.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_csv(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw UsageError(flag + ": '" + item + "' is not a number");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

void write_atomically(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + tmp.string() + "'");
    out << data;
    if (!out) throw UsageError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

int emit(ns_report* r, const std::string& out_dir) {
  if (out_dir.empty()) {
    std::cout << ns_report_json(r) << "\n";
    return 0;
  }
  fs::create_directories(out_dir);
  for (int i = 0; i < ns_report_series_count(r); ++i)
    write_atomically(fs::path(out_dir) / (std::string(ns_report_series_name(r, i)) + ".csv"),
                     ns_report_series_csv(r, i));
  write_atomically(fs::path(out_dir) / "report.json", std::string(ns_report_json(r)) + "\n");
  return 0;
}

int run(const std::string& command, const std::string& config_text, const Json& params,
        const std::string& out_dir) {
  ns_report* report = nullptr;
  const std::string p = params.dump();
  const int status = ns_run(command.c_str(), config_text.empty() ? nullptr : config_text.c_str(), p.c_str(), &report);
  if (status != NS_OK) {
    std::cerr << "normstab: " << ns_last_error() << "\n";
    return status == NS_ERR_CONFIG || status == NS_ERR_ARGUMENT ? kExitConfig : kExitNumerical;
  }
  int code = 0;
  try {
    code = emit(report, out_dir);
  } catch (...) {
    ns_report_free(report);
    throw;
  }
  ns_report_free(report);
  return code;
}

template <class T>
void put(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normal stability and hyperbolicity of equilibrium manifolds"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(ns_version()));

  std::string out_dir, config_path;
  std::optional<unsigned long long> seed;
  app.add_option("--out", out_dir, "write report.json and series CSVs into this directory");
  app.add_option("--seed", seed, "seed for randomized sweeps");

  std::string command;
  Json params = Json::object();
  bool config_required = false;

  auto* classify = app.add_subcommand("classify", "classify the equilibrium of a builtin or polynomial field");
  classify->add_option("--config", config_path, "config file")->required();
  std::optional<double> rho0;
  classify->add_option("--rho0", rho0, "initial radius for the graph map");
  classify->callback([&] {
    command = "classify";
    config_required = true;
    put(params, "rho0", rho0);
  });

  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory and assess convergence");
  simulate->add_option("--config", config_path, "config file")->required();
  std::string u0;
  std::optional<double> t_max, rho, sample_dt;
  simulate->add_option("--u0", u0, "initial state, comma separated")->required();
  simulate->add_option("--t-max", t_max, "time horizon");
  simulate->add_option("--rho", rho, "neighborhood radius");
  simulate->add_option("--sample-dt", sample_dt, "sampling interval");
  simulate->callback([&] {
    command = "simulate";
    config_required = true;
    params["u0"] = parse_csv(u0, "--u0");
    put(params, "t_max", t_max);
    put(params, "rho", rho);
    put(params, "sample_dt", sample_dt);
  });

  auto* wave = app.add_subcommand("wave", "traveling fronts of the bistable equation");
  wave->require_subcommand(1);
  std::optional<double> a, L, amplitude, center, width, shift, wave_rho, wave_t_max;
  std::optional<int> N;
  std::optional<std::string> sigma;
  std::vector<double> sigma_params;
  bool gap_check = false;
  for (const char* name : {"find", "spectrum", "simulate"}) {
    auto* sub = wave->add_subcommand(name);
    sub->add_option("--config", config_path, "config file with a wave section");
    sub->add_option("--a", a, "bistability parameter in (0, 1/2)");
    sub->add_option("--sigma", sigma, "flux kind: identity, linear, tanh");
    sub->add_option("--sigma-param", sigma_params, "flux parameters");
    if (std::string(name) != "find") {
      sub->add_option("--L", L, "half length of the computational interval");
      sub->add_option("--N", N, "interior grid points");
    }
    if (std::string(name) == "simulate") {
      sub->add_option("--t-max", wave_t_max, "time horizon");
      sub->add_option("--amplitude", amplitude, "Gaussian amplitude");
      sub->add_option("--center", center, "Gaussian center");
      sub->add_option("--width", width, "Gaussian width");
      sub->add_option("--shift", shift, "start from a translate w(. + shift) - w instead");
      sub->add_option("--rho", wave_rho, "neighborhood radius");
      sub->add_flag("--gap-check", gap_check, "compare the rate with the discrete spectral gap");
    }
    sub->callback([&, name] {
      command = std::string("wave.") + name;
      put(params, "a", a);
      put(params, "sigma_kind", sigma);
      if (!sigma_params.empty()) params["sigma_params"] = sigma_params;
      put(params, "L", L);
      put(params, "N", N);
      put(params, "t_max", wave_t_max);
      put(params, "amplitude", amplitude);
      put(params, "center", center);
      put(params, "width", width);
      put(params, "shift", shift);
      put(params, "rho", wave_rho);
      if (gap_check) params["gap_check"] = true;
    });
  }

  auto* ms = app.add_subcommand("ms", "linearized Mullins-Sekerka problem around a circle");
  ms->require_subcommand(1);
  std::optional<double> R, R_out, H;
  std::optional<int> k_max, radial_grid, intervals, points;
  std::string xi, z;
  for (const char* name : {"symbol", "modes", "chart"}) {
    auto* sub = ms->add_subcommand(name);
    sub->add_option("--config", config_path, "config file with an ms section");
    sub->add_option("--R", R, "interface radius");
    const std::string n = name;
    if (n == "symbol") {
      sub->add_option("--xi", xi, "frequencies, comma separated");
      sub->add_option("--strip-height", H, "half height of the strip");
      sub->add_option("--intervals", intervals, "grid intervals per half strip");
    }
    if (n == "modes") {
      sub->add_option("--R-out", R_out, "outer radius");
      sub->add_option("--k-max", k_max, "highest mode");
      sub->add_option("--radial-grid", radial_grid, "radial intervals per phase");
    }
    if (n == "chart") {
      sub->add_option("--z", z, "chart coefficients z0,z1,z2");
      sub->add_option("--points", points, "angular mesh size");
    }
    sub->callback([&, n] {
      command = "ms." + n;
      put(params, "R", R);
      put(params, "R_out", R_out);
      put(params, "k_max", k_max);
      put(params, "radial_grid", radial_grid);
      put(params, "strip_height", H);
      put(params, "intervals", intervals);
      put(params, "points", points);
      if (!xi.empty()) params["xi"] = parse_csv(xi, "--xi");
      if (!z.empty()) params["z"] = parse_csv(z, "--z");
    });
  }

  auto* examples = app.add_subcommand("examples", "built-in example studies");
  examples->require_subcommand(1);
  auto* ex_run = examples->add_subcommand("run", "relations, classification and sweeps for one example");
  std::string ex_name;
  std::optional<double> delta, ex_t_max, ex_rho;
  std::optional<int> count;
  ex_run->add_option("name", ex_name, "Ex1, Ex2m1, Ex2m2 or Hyperbolic3D")->required();
  ex_run->add_option("--config", config_path, "config file (tolerances only)");
  ex_run->add_option("--delta", delta, "sweep radius");
  ex_run->add_option("--count", count, "sweep size");
  ex_run->add_option("--t-max", ex_t_max, "sweep time horizon");
  ex_run->add_option("--rho", ex_rho, "sweep neighborhood radius");
  ex_run->callback([&] {
    command = "examples.run";
    params["name"] = ex_name;
    put(params, "delta", delta);
    put(params, "count", count);
    put(params, "t_max", ex_t_max);
    put(params, "rho", ex_rho);
  });

  try {
    app.parse(argc, argv);
    if (seed) params["seed"] = *seed;
    std::string config_text;
    if (!config_path.empty()) config_text = read_file(config_path);
    if (config_required && config_text.empty()) throw UsageError("config file is empty");
    return run(command, config_text, params, out_dir);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "normstab: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "normstab: " << e.what() << "\n";
    return kExitNumerical;
  }
}
