#pragma once

#include <cstdint>
#include <vector>

#include "vabal/probability.hpp"
#include "vabal/vae.hpp"

namespace vabal {

struct AllocatorConfig {
  double lambda_alloc = 0.5;  // keeps the refinement near the water-fill target
  double lambda_p = 10.0;     // budget-sum penalty
  std::size_t max_iters = 10000;
  double tol = 1e-8;
};

/// Integer water-filling: raise the lowest class counts toward a common
/// level, one unit at a time (ties by class index), until the budget is
/// spent. Minimizes max-min of the resulting counts.
std::vector<std::int64_t> water_fill(const std::vector<std::int64_t>& current_counts,
                                     std::int64_t budget);

/// Full column-stochastic confusion matrix P[n][m] = p(y_n | yhat_m) from a
/// recorded draw log over labelled samples: Bayes over the empirical label
/// ratios and the per-true-class prediction frequencies. Classes absent from
/// the labelled pool get uniform likelihood rows (and smoothed ratios);
/// columns no draw ever predicts fall back to uniform.
std::vector<double> tally_confusion_matrix(const std::vector<std::vector<int>>& draws,
                                           const std::vector<int>& labels,
                                           std::size_t num_classes);

/// Same, drawing n_mc latent predictions per labelled sample. Row-major
/// num_classes x num_classes, columns sum to 1.
std::vector<double> confusion_matrix_full(const RegularizedVae& vae,
                                          const std::vector<double>& h,
                                          const std::vector<int>& labels, std::size_t n_mc,
                                          const RngStream& rng);

struct RefineResult {
  std::vector<double> allocation;       // nonnegative reals
  std::vector<double> objective_trace;  // one entry per iteration, non-increasing
  std::size_t iterations = 0;
  bool converged = false;
};

/// Projected-gradient minimization of
///   ||n_init - P x||^2 + lambda_alloc ||n_init - x||^2
///   + lambda_p (budget - sum x)^2   over x >= 0.
/// The step comes from a Lipschitz bound, so the objective never increases.
RefineResult refine_allocation(const std::vector<double>& n_init, const std::vector<double>& P,
                               double budget, const AllocatorConfig& config = {});

/// Objective value and a KKT stationarity residual (for tests).
double refine_objective(const std::vector<double>& x, const std::vector<double>& n_init,
                        const std::vector<double>& P, double budget,
                        const AllocatorConfig& config);
double refine_kkt_residual(const std::vector<double>& x, const std::vector<double>& n_init,
                           const std::vector<double>& P, double budget,
                           const AllocatorConfig& config);

/// Round to integers, cap by availability, then walk classes in ascending
/// index adding/removing single units until the total is exactly the budget.
std::vector<std::int64_t> round_and_fix(const std::vector<double>& refined, std::int64_t budget,
                                        const std::vector<std::int64_t>& available);

}  // namespace vabal
