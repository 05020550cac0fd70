#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vabal/pool.hpp"
#include "vabal/preprocessor.hpp"
#include "vabal/vae.hpp"

namespace vabal {

inline constexpr std::size_t kNoSampleId = std::numeric_limits<std::size_t>::max();

/// Per-class estimates backing the posterior mislabelling probability, with
/// the raw Monte-Carlo counts they were computed from.
struct ProbabilityTable {
  std::vector<double> confusion;  // p(y_n | yhat_n)
  std::vector<double> prior;      // p(yhat_n), add-one smoothed
  std::size_t n_mc = 100;
  std::vector<std::int64_t> confusion_match;  // draws with yhat = n and y = n
  std::vector<std::int64_t> confusion_pred;   // draws with yhat = n
  std::vector<std::int64_t> prior_counts;     // draws predicting n
  std::int64_t total_draws = 0;
};

/// n_mc latent-label predictions for every h row. draws[i][l] is the class
/// whose block energy is smallest for the l-th z sample of row i. Each row
/// uses its own substream keyed by its position, so results do not depend on
/// scheduling; rows are processed in parallel.
std::vector<std::vector<int>> latent_prediction_draws(const RegularizedVae& vae,
                                                      const std::vector<double>& h,
                                                      std::size_t count, std::size_t n_mc,
                                                      const RngStream& rng);

/// Pure tallies over a recorded draw log (replayable in tests).
void tally_confusion(const std::vector<std::vector<int>>& draws, const std::vector<int>& labels,
                     std::size_t num_classes, ProbabilityTable& table);
void tally_prior(const std::vector<std::vector<int>>& draws, std::size_t num_classes,
                 ProbabilityTable& table);

/// p(y_n | yhat_n) from VAE predictions on the labelled samples; classes the
/// VAE never predicts fall back to 1/N_c.
std::vector<double> estimate_confusion(const RegularizedVae& vae, const std::vector<double>& h,
                                       const std::vector<int>& labels, std::size_t n_mc,
                                       const RngStream& rng, ProbabilityTable* table = nullptr);

/// p(yhat_n) from the same kind of draws, add-one smoothed so no class
/// annihilates its joint term.
std::vector<double> estimate_prior(const RegularizedVae& vae, const std::vector<double>& h,
                                   std::size_t count, std::size_t n_mc, const RngStream& rng,
                                   ProbabilityTable* table = nullptr);

struct UncertaintyScore {
  std::size_t id = kNoSampleId;
  double score = 0.0;
  /// confusion_n * softmax-weight of class n; the score is 1 - sum of these
  /// (or 1 - max weight in the likelihood-margin ablation).
  std::vector<double> joint_terms;
  std::vector<double> log_lik;
};

/// Bayes assembly of p(y != yhat | x) from per-class log-likelihood lower
/// bounds, the confusion vector, and the prior. All ratios are computed in
/// the log domain; the score is clamped to [0,1].
UncertaintyScore posterior_uncertainty(const std::vector<double>& log_lik,
                                       const std::vector<double>& confusion,
                                       const std::vector<double>& prior,
                                       std::size_t sample_id = kNoSampleId);

struct ScoreConfig {
  std::size_t n_mc = 100;
  bool disable_prior = false;      // force p(yhat) uniform
  bool disable_confusion = false;  // force p(y|yhat) = 1; rank by 1 - max weight
};

/// One uncertainty score per unlabelled sample, in unlabelled-pool order.
/// Scoring is parallel across samples; every sample derives its own rng
/// substream, so results are independent of thread count.
std::vector<UncertaintyScore> score_pool(const RegularizedVae& vae,
                                         const MlpClassifier& classifier,
                                         const FeaturePreprocessor& pre, const Pool& pool,
                                         const Dataset& dataset, const ScoreConfig& config,
                                         const RngStream& rng,
                                         ProbabilityTable* table_out = nullptr);

}  // namespace vabal
