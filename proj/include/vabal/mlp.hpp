#pragma once

#include <string>
#include <vector>

#include "vabal/adam.hpp"
#include "vabal/dataset.hpp"
#include "vabal/pool.hpp"
#include "vabal/rng.hpp"
#include "vabal/tape.hpp"
#include "vabal/tensor.hpp"

namespace vabal {

struct DenseLayer {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct MlpConfig {
  std::vector<std::size_t> hidden = {64, 64, 64, 64};
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double dropout = 0.0;  // applied before each hidden activation when > 0
};

/// Plain MLP classifier; every hidden activation is a feature tap feeding the
/// VAE-side preprocessing. Hidden layers are He-initialized, the output head
/// starts at zero (uniform predictions before training).
class MlpClassifier {
 public:
  MlpClassifier(std::size_t input_dim, std::size_t num_classes, MlpConfig config = {});

  void init_params(RngStream& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_taps() const { return config_.hidden.size(); }
  std::vector<std::size_t> tap_dims() const { return config_.hidden; }
  const MlpConfig& config() const { return config_; }
  bool has_dropout() const { return config_.dropout > 0.0; }

  /// Batched inference. logits must hold batch*num_classes doubles. When taps
  /// is given, each entry receives that hidden layer's activations
  /// [batch, width]. A dropout_rng turns on stochastic inverted-dropout masks
  /// (used for training passes and MC-dropout inference).
  void forward(const double* x, std::size_t batch, double* logits,
               std::vector<std::vector<double>>* taps = nullptr,
               RngStream* dropout_rng = nullptr) const;

  /// Softmax class probabilities for one sample.
  std::vector<double> predict_proba(const double* x) const;
  int predict_label(const double* x) const;

  /// Training-mode forward on a tape; returns the logits node.
  Tape::Id forward_tape(Tape& tape, Tape::Id x, RngStream* dropout_rng);

  std::vector<Tensor*> params();
  std::vector<std::pair<std::string, Tensor*>> named_params();

 private:
  std::size_t input_dim_;
  std::size_t num_classes_;
  MlpConfig config_;
  std::vector<DenseLayer> layers_;  // hidden layers then head
};

/// Cross-entropy training on the labelled pool with Adam; the model is
/// reinitialized from scratch first. Returns the per-epoch mean loss.
/// Throws ContractError when the labelled pool is empty or single-class.
std::vector<double> train_classifier(MlpClassifier& model, const Pool& pool,
                                     const Dataset& dataset, std::size_t epochs,
                                     RngStream& rng);

/// Accuracy of argmax predictions over the given sample ids.
double evaluate_accuracy(const MlpClassifier& model, const Dataset& dataset,
                         const std::vector<std::size_t>& ids);

}  // namespace vabal
