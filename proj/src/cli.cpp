#include "lar/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lar/errors.hpp"
#include "lar/io.hpp"
#include "lar/presets.hpp"
#include "lar/sim_harness.hpp"
#include "lar/sweeps.hpp"

namespace lar {

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (flat [section] key = value)");
  cmd->add_option("--preset", o.preset, "Named preset");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--set", o.overrides, "Override, section.key=value (repeatable)");
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&o](const std::uint64_t& s) {
        o.seed = s;
        o.seed_given = true;
      },
      "Master seed");
}

Config build_config(const CommonOptions& o) {
  Config config;
  if (!o.preset.empty()) config.merge(load_preset(o.preset));
  if (!o.config_path.empty()) config.merge(Config::parse_file(o.config_path));
  for (const auto& s : o.overrides) config.apply_override(s);
  if (o.seed_given) config.set("run.seed", std::to_string(o.seed), "--seed");
  config.check_known_keys();
  return config;
}

std::string out_path(const CommonOptions& o, const std::string& name) {
  std::filesystem::create_directories(o.out_dir);
  return (std::filesystem::path(o.out_dir) / name).string();
}

template <class Rows, class Writer>
void emit_csv(const CommonOptions& o, const std::string& name, const Rows& rows, Writer writer, std::ostream& out) {
  std::ostringstream csv;
  writer(csv, rows);
  const std::string path = out_path(o, name);
  write_text_file(path, csv.str());
  out << "wrote " << path << " (" << rows.size() << " rows)\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lidar-aided GNSS ambiguity resolution: analysis, simulation and solving"};
  app.require_subcommand(1);

  CommonOptions scan_opts, ratio_opts, grid_opts, sim_opts, solve_opts;
  auto* scan = app.add_subcommand("adop-scan", "ADOP and success rate versus satellite count");
  add_common(scan, scan_opts);
  auto* ratio = app.add_subcommand("ratio-curve", "Exact and approximate ADOP-ratios versus satellite count");
  add_common(ratio, ratio_opts);
  auto* grid = app.add_subcommand("success-grid", "Lidar-aided ADOP over satellite count and lidar precision");
  add_common(grid, grid_opts);
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo positioning run");
  add_common(sim, sim_opts);
  bool dump_bundle = false;
  sim->add_flag("--dump-bundle", dump_bundle, "Also write the first epoch as bundle.json");
  auto* solve = app.add_subcommand("solve-epoch", "Float solution and ambiguity resolution of one epoch bundle");
  std::string bundle_path;
  solve->add_option("bundle", bundle_path, "Epoch bundle (JSON)")->required();
  solve->add_option("--out", solve_opts.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*scan) {
      const auto rows = adop_scan(SweepSettings::from_config(build_config(scan_opts)));
      emit_csv(scan_opts, "adop_scan.csv", rows, write_sweep_csv, out);
    } else if (*ratio) {
      const auto rows = ratio_curve(SweepSettings::from_config(build_config(ratio_opts)));
      emit_csv(ratio_opts, "ratio_curve.csv", rows, write_ratio_csv, out);
    } else if (*grid) {
      const auto rows = success_grid(SweepSettings::from_config(build_config(grid_opts)));
      emit_csv(grid_opts, "success_grid.csv", rows, write_sweep_csv, out);
    } else if (*sim) {
      const ScenarioSpec spec = scenario_from_config(build_config(sim_opts));
      const ExperimentResult result = run_experiment(spec);
      std::ostringstream csv;
      write_epochs_csv(csv, result.epochs);
      const std::string epochs_path = out_path(sim_opts, "epochs.csv");
      write_text_file(epochs_path, csv.str());
      const std::string summary = run_summary_json(result.summary, spec);
      write_text_file(out_path(sim_opts, "summary.json"), summary);
      if (dump_bundle) {
        const SimulatedEpoch first = simulate_epoch(spec, result.geometry, 0);
        write_text_file(out_path(sim_opts, "bundle.json"), bundle_json(first, result.geometry, spec));
      }
      const RunSummary& rs = result.summary;
      out << "wrote " << epochs_path << '\n'
          << "epochs " << rs.epochs << ", failed " << rs.failed << ", accepted " << rs.accepted << '\n'
          << "empirical success rate " << format_double(rs.empirical_success_rate) << '\n'
          << "3D RMSE (reported) " << format_double(rs.reported.three_d) << " m\n";
    } else if (*solve) {
      const EpochBundle bundle = read_bundle(bundle_path);
      const FloatSolution sol = solve_float(bundle.data);
      AmbiguityOutcome outcome;
      if (bundle.data.ambiguity_count() > 0) {
        ResolveOptions ro;
        ro.threshold = bundle.threshold;
        ro.full_resolution = bundle.full_resolution;
        outcome = resolve(AmbiguityProblem::from_float(sol), ro);
      }
      const std::string text = solution_json(sol, outcome, bundle.data);
      write_text_file(out_path(solve_opts, "solution.json"), text);
      out << text;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lar
