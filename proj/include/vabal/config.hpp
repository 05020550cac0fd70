#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vabal/allocator.hpp"
#include "vabal/dataset.hpp"
#include "vabal/mlp.hpp"
#include "vabal/vae.hpp"

namespace vabal {

/// Everything one experiment needs. Parsed from JSON; unknown keys are
/// rejected at every level.
struct ExperimentConfig {
  // data source: exactly one of the two
  std::optional<MixtureSpec> mixture;
  std::string csv_path;

  std::string strategy = "vabal";  // vabal|random|max_entropy|mc_dropout|vabal_balanced
  std::size_t rounds = 5;
  std::size_t budget = 40;  // N_r, also the initial labelled pool size

  double lambda = 0.005;
  std::string w_variant = "square";
  std::size_t dims_per_class = 10;
  std::size_t n_mc = 100;
  bool disable_prior = false;
  bool disable_confusion = false;

  std::vector<std::uint64_t> seeds = {1};

  MlpConfig classifier;
  VaeConfig vae;
  std::string vae_pool = "current";  // current|initial
  std::string kl_mask = "full";      // full|exclude-block

  std::size_t mc_dropout_passes = 100;
  AllocatorConfig allocator;

  std::string output_dir = "out";
  bool dump_probabilities = false;
  bool save_checkpoints = false;

  /// Throws ContractError on invalid combinations; also folds the top-level
  /// lambda / w_variant / dims_per_class / kl_mask into the VaeConfig.
  void validate_and_finalize();
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

}  // namespace vabal
