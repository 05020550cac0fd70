#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vabal/dataset.hpp"
#include "vabal/error.hpp"
#include "vabal/harness.hpp"

namespace {

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vabal: active-learning lab (class-regularized VAE uncertainty + baselines)"};
  app.require_subcommand(1);

  std::string spec_path, out_path, config_path, dir, axis, values;

  CLI::App* gen = app.add_subcommand("generate", "Generate a mixture dataset as CSV");
  gen->add_option("--spec", spec_path, "mixture spec JSON")->required();
  gen->add_option("--out", out_path, "output CSV path")->required();

  CLI::App* run = app.add_subcommand("run", "Run an active-learning experiment");
  run->add_option("--config", config_path, "experiment config JSON")->required();

  CLI::App* sw = app.add_subcommand("sweep", "Run a one-axis sweep");
  sw->add_option("--config", config_path, "experiment config JSON")->required();
  sw->add_option("--axis", axis, "lambda | budget | w_variant")->required();
  sw->add_option("--values", values, "comma-separated values")->required();

  CLI::App* rep = app.add_subcommand("report", "Aggregate per-round CSVs in a directory");
  rep->add_option("--dir", dir, "directory with run CSVs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const vabal::MixtureSpec spec = vabal::load_mixture_spec(spec_path);
      const vabal::Dataset ds = vabal::generate_mixture(spec);
      vabal::save_csv(ds, out_path);
      std::printf("wrote %zu samples (%zu classes, dim %zu) to %s\n", ds.num_samples(),
                  ds.num_classes, ds.input_dim, out_path.c_str());
    } else if (run->parsed()) {
      const vabal::ExperimentConfig cfg = vabal::load_config(config_path);
      const auto results = vabal::run_experiment(cfg);
      for (const vabal::RunResult& r : results) {
        std::printf("seed %llu: %zu rounds, final accuracy %.4f\n",
                    static_cast<unsigned long long>(r.seed), r.records.size(),
                    r.records.back().accuracy);
        for (const std::string& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
      }
      std::printf("results under %s\n", cfg.output_dir.c_str());
    } else if (sw->parsed()) {
      const vabal::ExperimentConfig cfg = vabal::load_config(config_path);
      const auto results = vabal::sweep(cfg, axis, split_values(values));
      std::printf("%zu runs complete; results under %s\n", results.size(),
                  cfg.output_dir.c_str());
    } else if (rep->parsed()) {
      const vabal::ReportSummary summary = vabal::report(dir);
      for (const vabal::GroupSummary& g : summary.groups)
        std::printf("%-24s %-16s seeds=%zu avg=%.4f final=%.4f\n", g.group.c_str(),
                    g.strategy.c_str(), g.num_seeds, g.avg_accuracy, g.final_accuracy);
      std::printf("wrote aggregate.csv and summary.json under %s\n", dir.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
