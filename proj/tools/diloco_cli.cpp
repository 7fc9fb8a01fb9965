#include <CLI11/CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "diloco/error.hpp"
#include "diloco/harness/compare.hpp"
#include "diloco/harness/experiment.hpp"
#include "diloco/harness/presets.hpp"

namespace h = diloco::harness;

namespace {

void print_report(const h::ExperimentReport& r) {
  std::cout << r.config.name << ": " << r.rows << " rows";
  if (r.config.kind == h::ExperimentKind::Training) std::cout << ", " << r.diverged << " diverged";
  std::cout << "\n  " << r.runs_csv.string() << "\n  " << r.manifest.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DiLoCo desk-scale simulator: training sweeps, network model, run comparison"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::size_t jobs = 1;
  app.add_option("--seed", seed, "Base seed (overrides the config)");
  app.add_option("--out-dir", out_dir, "Directory for runs.csv and manifest.yaml")
      ->capture_default_str();
  app.add_option("--jobs", jobs, "Parallel runs (0 = all cores)")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run a config file or a manifest");
  run->fallthrough();
  std::string config_path;
  run->add_option("config", config_path, "Config or manifest.yaml")->required()->check(CLI::ExistingFile);

  auto* preset = app.add_subcommand("preset", "Run a bundled preset");
  preset->fallthrough();
  std::string preset_name;
  bool list = false;
  bool show = false;
  preset->add_option("name", preset_name, "Preset name");
  preset->add_flag("--list", list, "List preset names");
  preset->add_flag("--show", show, "Print the preset config instead of running it");

  auto* compare = app.add_subcommand("compare", "Paired final-loss comparison of two variants");
  std::string csv_path;
  std::string baseline;
  std::string candidate;
  bool pairs = false;
  compare->add_option("csv", csv_path, "runs.csv")->required()->check(CLI::ExistingFile);
  compare->add_option("baseline", baseline, "Baseline variant or method")->required();
  compare->add_option("candidate", candidate, "Candidate variant or method")->required();
  compare->add_flag("--pairs", pairs, "Also print every paired delta");

  CLI11_PARSE(app, argc, argv);

  h::RunOptions options;
  options.out_dir = out_dir;
  options.jobs = jobs;
  options.seed = seed;

  try {
    if (*run) {
      print_report(h::run_experiment_file(config_path, options));
    } else if (*preset) {
      if (list) {
        for (auto name : h::preset_names()) std::cout << name << "\n";
        return 0;
      }
      if (preset_name.empty()) throw diloco::ConfigError("preset: a name is required (see --list)");
      if (show) {
        std::cout << h::preset_text(preset_name);
        return 0;
      }
      print_report(h::run_experiment(h::load_preset(preset_name), options));
    } else if (*compare) {
      const auto summary = h::compare_runs_file(csv_path, baseline, candidate);
      std::cout << h::write_csv(h::summary_table(summary));
      if (pairs) {
        h::CsvTable t;
        t.header = {"key", "seed", "baseline", "candidate", "delta", "relative"};
        for (const auto& p : summary.pairs) {
          t.rows.push_back({p.key, std::to_string(p.seed), h::format_number(p.baseline),
                            h::format_number(p.candidate), h::format_number(p.delta),
                            h::format_number(p.relative)});
        }
        std::cout << h::write_csv(t);
      }
    }
  } catch (const diloco::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
