#pragma once

#include <string>
#include <vector>

#include "vabal/mlp.hpp"
#include "vabal/rng.hpp"
#include "vabal/tape.hpp"
#include "vabal/tensor.hpp"

namespace vabal {

struct PreprocessorConfig {
  std::size_t proj_dim = 128;
  double momentum = 0.9;  // running-statistics blend
  double eps = 1e-5;
};

/// Turns raw classifier taps into the VAE input: per-tap standardization with
/// running statistics, a per-tap sigmoid projection, then concatenation.
/// The projections are trainable and belong to the VAE side; the classifier
/// only supplies the tap activations.
class FeaturePreprocessor {
 public:
  FeaturePreprocessor(std::vector<std::size_t> tap_dims, PreprocessorConfig config = {});

  void init_params(RngStream& rng);

  std::size_t num_taps() const { return tap_dims_.size(); }
  std::size_t output_dim() const { return tap_dims_.size() * config_.proj_dim; }
  bool warmed_up() const { return updates_ > 0; }
  const PreprocessorConfig& config() const { return config_; }

  /// Training mode: standardize each tap with the batch statistics and fold
  /// them into the running estimates.
  std::vector<std::vector<double>> normalize_train(
      const std::vector<std::vector<double>>& taps, std::size_t batch);

  /// Inference mode: standardize with the running statistics only.
  std::vector<std::vector<double>> normalize_eval(
      const std::vector<std::vector<double>>& taps, std::size_t batch) const;

  /// Project normalized taps and concatenate on the tape (training).
  Tape::Id project_tape(Tape& tape, const std::vector<Tape::Id>& normalized_taps);

  /// Same computation without a tape (inference); h_out holds
  /// batch * output_dim() doubles.
  void project_eval(const std::vector<std::vector<double>>& normalized_taps,
                    std::size_t batch, double* h_out) const;

  std::vector<Tensor*> params();
  std::vector<std::pair<std::string, Tensor*>> named_params();

 private:
  std::vector<std::size_t> tap_dims_;
  PreprocessorConfig config_;
  std::vector<DenseLayer> proj_;
  std::vector<std::vector<double>> run_mean_;
  std::vector<std::vector<double>> run_var_;
  std::size_t updates_ = 0;
};

/// Full inference pipeline: frozen classifier taps -> running-stat
/// normalization -> sigmoid projections -> concatenated h in (0,1).
/// Requires warmed-up statistics.
std::vector<double> extract_h(const MlpClassifier& model, const FeaturePreprocessor& pre,
                              const double* x, std::size_t batch);

}  // namespace vabal
