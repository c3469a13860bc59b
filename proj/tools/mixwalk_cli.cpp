// mixwalk: command-line front end for simulations, estimates, sweeps and
// report merging.
//
// Exit codes: 0 success, 2 config error, 3 resource/cutoff error,
// 4 internal invariant violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixwalk/mixwalk.hpp"

namespace {

using nlohmann::json;
using namespace mixwalk;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::string format = "csv";
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

ExperimentConfig apply_overrides(json j, const CommonFlags& f) {
  if (f.seed) j["seed"] = *f.seed;
  if (f.workers) j["workers"] = *f.workers;
  if (f.out) j["out"] = *f.out;
  return config_from_json(j);
}

void emit(const ExperimentReport& rep, const std::string& format, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto [csv_path, json_path] = write_report(rep, out_dir);
  if (format == "json")
    std::cout << rep.summary().dump(2) << "\n";
  else
    std::cout << rep.csv();
  std::cerr << "wrote " << csv_path << " and " << json_path << "\n";
}

int cmd_simulate(const CommonFlags& f, std::optional<std::uint64_t> steps, std::uint64_t every) {
  if (f.config_path.empty()) throw ConfigError("simulate: --config is required");
  json j = read_json_file(f.config_path);
  if (!j.contains("kind")) j["kind"] = "return-window";
  if (!j.contains("n_grid")) j["n_grid"] = json::array({steps.value_or(0)});
  const ExperimentConfig c = apply_overrides(j, f);
  const std::uint64_t n = steps.value_or(c.n_grid.values().back());
  if (every == 0) throw ConfigError("simulate: --every must be >= 1");
  const auto env = share(c.environment);
  const std::size_t d = c.partition.dimension();

  with_storage(d, [&]<std::size_t D>() {
    Walk<D> w(c.partition, env, c.seed);
    auto line = [&] {
      std::cout << w.time();
      for (std::size_t a = 0; a < d; ++a) std::cout << ',' << w.position()[a];
      std::cout << ',' << w.range_size() << ',' << w.fresh_steps() << '\n';
    };
    if (f.format == "csv") {
      std::cout << "t";
      for (std::size_t a = 0; a < d; ++a) std::cout << ",x" << a + 1;
      std::cout << ",range,fresh_steps\n";
      line();
    }
    for (std::uint64_t k = 1; k <= n; ++k) {
      w.step();
      if (f.format == "csv" && (k % every == 0 || k == n)) line();
    }
    if (f.format == "json") {
      json box = json::array();
      for (const auto& e : w.bounding_box()) box.push_back({e.min, e.max});
      std::cout << json{{"partition", c.partition.dims()},
                        {"environment", environment_to_json(c.environment)},
                        {"seed", c.seed},
                        {"n", w.time()},
                        {"position", w.position_coords()},
                        {"range", w.range_size()},
                        {"fresh_steps", w.fresh_steps()},
                        {"bounding_box", box}}
                       .dump(2)
                << "\n";
    }
  });
  return 0;
}

int cmd_estimate(const CommonFlags& f) {
  if (f.config_path.empty()) throw ConfigError("estimate: --config is required");
  const ExperimentConfig c = apply_overrides(read_json_file(f.config_path), f);
  emit(run_experiment(c), f.format, c.out);
  return 0;
}

std::vector<json> builtin_sweep() {
  return {
      {{"kind", "shape"},
       {"partition", {1, 1}},
       {"n_grid", {{"base", 2}, {"from", 10}, {"to", 16}, {"step", 2}}},
       {"replicas", 400},
       {"seed", 20261018}},
      {{"kind", "strategy"},
       {"dimension", 2},
       {"n_grid", {16384}},
       {"replicas", 200},
       {"seed", 20261018}},
  };
}

int cmd_sweep(const CommonFlags& f) {
  std::vector<json> configs;
  if (f.config_path.empty()) {
    configs = builtin_sweep();
  } else {
    json j = read_json_file(f.config_path);
    if (j.is_object() && j.contains("experiments")) {
      if (!j["experiments"].is_array()) throw ConfigError("config field 'experiments': expected an array");
      for (const auto& e : j["experiments"]) configs.push_back(e);
    } else {
      configs.push_back(j);
    }
  }
  // Validate everything before the first simulation starts.
  std::vector<ExperimentConfig> parsed;
  for (const auto& j : configs) parsed.push_back(apply_overrides(j, f));
  for (const auto& c : parsed) emit(run_experiment(c), f.format, c.out);
  return 0;
}

int cmd_merge(const std::vector<std::string>& inputs, const CommonFlags& f) {
  std::vector<ExperimentReport> parts;
  for (const auto& path : inputs) parts.push_back(report_from_summary(read_json_file(path)));
  const ExperimentReport merged = merge_results(parts);
  emit(merged, f.format, f.out.value_or("out"));
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const CommonFlags& f) {
  for (const auto& path : inputs) {
    const ExperimentReport rep = report_from_summary(read_json_file(path));
    if (f.format == "json") {
      json rows = json::array();
      for (const auto& r : rep.rows()) rows.push_back(row_to_json(r));
      std::cout << json{{"digest", rep.digest}, {"rows", rows}}.dump(2) << "\n";
    } else {
      std::cout << rep.csv();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and estimation toolkit for mixture self-interacting random walks"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub, bool config) {
    if (config) sub->add_option("--config", flags.config_path, "experiment config (JSON)");
    sub->add_option("--seed", flags.seed, "master seed override");
    sub->add_option("--workers", flags.workers, "worker threads (0 = all cores)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--format", flags.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
  };

  std::optional<std::uint64_t> steps;
  std::uint64_t every = 1;
  auto* simulate = app.add_subcommand("simulate", "run one walk and print its trajectory or final state");
  add_common(simulate, true);
  simulate->add_option("--steps", steps, "number of steps (default: last n of the grid)");
  simulate->add_option("--every", every, "print every k-th step (csv)");

  auto* estimate = app.add_subcommand("estimate", "run one experiment over its n-grid");
  add_common(estimate, true);

  auto* sweep = app.add_subcommand("sweep", "run several experiments (built-in diagnostics without --config)");
  add_common(sweep, true);

  std::vector<std::string> inputs;
  auto* merge = app.add_subcommand("merge", "merge partial summaries over disjoint replica ranges");
  add_common(merge, false);
  merge->add_option("summaries", inputs, "partial *.summary.json files")->required();

  auto* report = app.add_subcommand("report", "print the rows of summary files");
  report->add_option("--format", flags.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
  report->add_option("summaries", inputs, "*.summary.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(flags, steps, every);
    if (*estimate) return cmd_estimate(flags);
    if (*sweep) return cmd_sweep(flags);
    if (*merge) return cmd_merge(inputs, flags);
    if (*report) return cmd_report(inputs, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const OverflowError& e) {
    std::cerr << "overflow: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
