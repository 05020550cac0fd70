#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vabal/rng.hpp"

namespace vabal {

/// Parameters of a synthetic isotropic Gaussian mixture classification set.
struct MixtureSpec {
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::vector<std::size_t> counts;            // per class
  std::vector<std::vector<double>> means;     // per class, length input_dim
  double stddev = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Feature matrix plus labels and a train/test partition over sample ids.
struct Dataset {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // row-major num_samples x input_dim
  std::vector<int> labels;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;

  std::size_t num_samples() const { return labels.size(); }
  const double* row(std::size_t id) const { return features.data() + id * input_dim; }

  std::vector<std::int64_t> class_counts(const std::vector<std::size_t>& ids) const;
  std::vector<std::int64_t> train_class_counts() const { return class_counts(train_ids); }

  /// For CSV-loaded data (everything in train): move a stratified fraction
  /// of each class into the test split.
  void stratified_split(double test_fraction, RngStream& rng);
};

Dataset generate_mixture(const MixtureSpec& spec);

/// Keep the training samples of keep_classes intact and randomly drop
/// removal_fraction of every other class (at least one sample survives).
/// The test split is never touched.
Dataset make_dominant(const Dataset& dataset, const std::vector<int>& keep_classes,
                      double removal_fraction, RngStream& rng);

/// Mirror image: subsample only the rare_classes themselves.
Dataset make_rare(const Dataset& dataset, const std::vector<int>& rare_classes,
                  double removal_fraction, RngStream& rng);

/// CSV schema: header `label,f0,f1,...`, one sample per row, labels are
/// nonnegative integers. All rows land in the train split. Label gaps load
/// as empty classes and produce a warning record.
Dataset load_csv(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_csv(const Dataset& dataset, const std::string& path);

std::string mixture_to_json(const MixtureSpec& spec);
MixtureSpec mixture_from_json(const std::string& text);
MixtureSpec load_mixture_spec(const std::string& path);

}  // namespace vabal
