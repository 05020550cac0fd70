#pragma once

#include <span>
#include <string>
#include <vector>

#include "vabal/mlp.hpp"
#include "vabal/preprocessor.hpp"
#include "vabal/rng.hpp"
#include "vabal/tape.hpp"

namespace vabal {

/// How per-dimension latent responses are turned into class energies.
enum class EnergyVariant { Square, Absolute, Sigmoid };

EnergyVariant energy_variant_from_string(const std::string& name);
std::string to_string(EnergyVariant v);

enum class KlMask { Full, ExcludeBlock };

/// Disjoint blocks of latent dimensions, one block per class.
struct LatentPartition {
  std::size_t num_classes = 0;
  std::size_t dims_per_class = 10;

  std::size_t latent_dim() const { return num_classes * dims_per_class; }
  std::size_t block_begin(std::size_t cls) const { return cls * dims_per_class; }
  std::size_t block_end(std::size_t cls) const { return (cls + 1) * dims_per_class; }
};

struct VaeConfig {
  std::size_t hidden = 128;
  std::size_t dims_per_class = 10;
  double lambda = 0.005;
  EnergyVariant variant = EnergyVariant::Square;
  KlMask kl_mask = KlMask::Full;
  double lr = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
};

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// VAE over preprocessed classifier features with a class-partitioned latent
/// space. The architecture is a conventional VAE; the class structure comes
/// only from the energy regularizer used during training.
class RegularizedVae {
 public:
  RegularizedVae(std::size_t input_dim, std::size_t num_classes, VaeConfig config = {});

  void init_params(RngStream& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return partition_.num_classes; }
  std::size_t latent_dim() const { return partition_.latent_dim(); }
  const LatentPartition& partition() const { return partition_; }
  const VaeConfig& config() const { return config_; }

  /// Inference-mode encoder; writes clamped log-variances.
  void encode(const double* h, std::size_t batch, double* mu, double* log_var) const;
  /// Inference-mode decoder with sigmoid output.
  void decode(const double* z, std::size_t batch, double* h_hat) const;

  /// Tape-mode encoder; log_var comes out clamped.
  std::pair<Tape::Id, Tape::Id> encode_tape(Tape& tape, Tape::Id h);
  Tape::Id decode_tape(Tape& tape, Tape::Id z);

  std::vector<Tensor*> params();
  std::vector<std::pair<std::string, Tensor*>> named_params();

 private:
  std::size_t input_dim_;
  LatentPartition partition_;
  VaeConfig config_;
  DenseLayer enc1_, enc2_, enc_mu_, enc_logvar_;
  DenseLayer dec1_, dec2_, dec_out_;
};

/// w_n = sum over the class-n block of v(z_j) with v per variant.
std::vector<double> class_energies(std::span<const double> z, const LatentPartition& partition,
                                   EnergyVariant variant);

/// argmin over energies; ties break toward the lowest class index.
std::size_t argmin_energy(std::span<const double> energies);

/// Draw z ~ q(z|h) once and return the class whose block has the least
/// energy.
int predict_latent_label(const RegularizedVae& vae, const double* h, RngStream& rng);

// --- tape composites -------------------------------------------------------

/// z = mu + exp(0.5 * log_var) (*) eps. eps is recorded as a constant.
Tape::Id reparameterize(Tape& tape, Tape::Id mu, Tape::Id log_var, Tensor eps);

/// KL(q || N(0,I)) summed over every element:
/// -0.5 * sum(1 + log_var - mu^2 - exp(log_var)).
Tape::Id kl_diag_gaussian(Tape& tape, Tape::Id mu, Tape::Id log_var);

/// Per-class energies of a latent batch: [B, latent] -> [B, num_classes].
Tape::Id class_energies_tape(Tape& tape, Tape::Id z, const LatentPartition& partition,
                             EnergyVariant variant);

/// Cross-entropy between softmax(-w(z)) and one-hot targets, averaged over
/// the batch. Throws if a target row is not one-hot.
Tape::Id class_loss_tape(Tape& tape, Tape::Id z, const LatentPartition& partition,
                         Tape::Id target_onehot, EnergyVariant variant);

struct VaeLossIds {
  Tape::Id total = -1;  // recon + kl  (negative ELBO, batch mean)
  Tape::Id recon = -1;
  Tape::Id kl = -1;
  Tape::Id z = -1;
  Tape::Id mu = -1;
  Tape::Id log_var = -1;
};

/// Negative ELBO with a unit-variance Gaussian decoder: 0.5*||target - h_hat||^2
/// reconstruction plus the KL term, averaged over the batch; single-sample
/// reparameterized MC.
VaeLossIds vae_loss_tape(Tape& tape, RegularizedVae& vae, Tape::Id h_input,
                         Tape::Id recon_target, Tensor eps);

// --- spec-level conveniences ------------------------------------------------

/// Negative ELBO of one batch of h rows under the current parameters.
double loss_vae(RegularizedVae& vae, const std::vector<double>& h, std::size_t batch,
                RngStream& rng);

/// Class regularization loss for given z rows and integer targets.
double loss_class(RegularizedVae& vae, const std::vector<double>& z, std::size_t batch,
                  const std::vector<int>& targets);

struct VaeTrainResult {
  std::vector<double> vae_loss;    // per-epoch mean of recon + kl
  std::vector<double> class_loss;  // per-epoch mean cross-entropy (unweighted)
};

/// Reinitialize VAE and preprocessor, then train them jointly on the
/// unlabelled samples with classifier-predicted targets. The classifier is
/// read-only throughout.
VaeTrainResult train_vae(RegularizedVae& vae, FeaturePreprocessor& pre,
                         const MlpClassifier& classifier, const Dataset& dataset,
                         const std::vector<std::size_t>& unlabelled_ids, std::size_t epochs,
                         RngStream& rng);

/// Monte-Carlo lower bound of log p(x | predicted class = cls): draw z from
/// q(z|h), zero the class block, decode, and average the negative loss over
/// num_mc draws. Stays in the log domain.
double masked_log_likelihood(const RegularizedVae& vae, const double* h, std::size_t cls,
                             std::size_t num_mc, RngStream& rng);

}  // namespace vabal
