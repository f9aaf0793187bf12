#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omps/harness.hpp"
#include "omps/verify.hpp"

namespace {

omps::ExperimentConfig load_config(const std::string& path) {
  return omps::ExperimentConfig::from_json_string(omps::read_file(path));
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) values.push_back(std::stod(token));
  }
  return values;
}

void emit_run(const omps::ExperimentConfig& cfg, const omps::RunResult& result) {
  const std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
  if (cfg.format == "csv" || cfg.format == "all") {
    omps::write_file((dir / "episodes.csv").string(), omps::records_to_csv(result.records));
    std::cout << "wrote " << (dir / "episodes.csv").string() << "\n";
  }
  if (cfg.format == "json" || cfg.format == "all") {
    omps::write_file((dir / "summary.json").string(), omps::run_summary_json(cfg, result));
    std::cout << "wrote " << (dir / "summary.json").string() << "\n";
  }
  if (cfg.format == "svg" || cfg.format == "all") {
    omps::write_file((dir / "regret.svg").string(),
                     omps::series_to_svg(result.cumulative_regret, "cumulative regret"));
    std::cout << "wrote " << (dir / "regret.svg").string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occupancy-measure optimistic policy search laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format, axis, values_csv;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int sweep_seeds = 10;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", seed, "override run seed")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--format", format, "csv|json|svg|all");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one axis over values");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "one of K, H, d, S")->required();
  sweep_cmd->add_option("--values", values_csv, "comma-separated values")->required();
  sweep_cmd->add_option("--sweep-seeds", sweep_seeds, "seeds per cell");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the module invariant suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify_cmd->parsed()) return omps::run_verification(std::cout) == 0 ? 0 : 1;

    omps::ExperimentConfig cfg = load_config(config_path);
    if (seed_set) cfg.run_seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!format.empty()) cfg.format = format;

    if (run_cmd->parsed()) {
      const omps::RunResult result = omps::run_experiment(cfg);
      std::cout << "episodes: " << result.records.size()
                << "  final regret: " << result.final_regret
                << "  contained: " << result.episodes_contained << "\n";
      emit_run(cfg, result);
      return 0;
    }

    const omps::SweepResult result = omps::sweep(cfg, axis, parse_values(values_csv), sweep_seeds);
    std::cout << "axis " << axis << ", log-log slope " << result.loglog_slope << "\n";
    const std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    omps::write_file((dir / "sweep.csv").string(), omps::sweep_to_csv(result));
    omps::write_file((dir / "sweep.json").string(), omps::sweep_summary_json(cfg, result));
    std::cout << "wrote " << (dir / "sweep.csv").string() << " and sweep.json\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
