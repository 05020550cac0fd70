#include "vabal/allocator.hpp"

#include <algorithm>
#include <cmath>

#include "vabal/error.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

std::vector<std::int64_t> water_fill(const std::vector<std::int64_t>& current_counts,
                                     std::int64_t budget) {
  if (budget < 0) throw ContractError("water_fill: negative budget");
  for (std::int64_t c : current_counts)
    if (c < 0) throw ContractError("water_fill: negative count");
  std::vector<std::int64_t> level = current_counts;
  std::vector<std::int64_t> alloc(current_counts.size(), 0);
  for (std::int64_t unit = 0; unit < budget; ++unit) {
    std::size_t lowest = 0;
    for (std::size_t i = 1; i < level.size(); ++i)
      if (level[i] < level[lowest]) lowest = i;
    ++alloc[lowest];
    ++level[lowest];
  }
  return alloc;
}

std::vector<double> tally_confusion_matrix(const std::vector<std::vector<int>>& draws,
                                           const std::vector<int>& labels,
                                           std::size_t num_classes) {
  if (draws.size() != labels.size())
    throw ContractError("tally_confusion_matrix: draws/labels size mismatch");
  const std::size_t nc = num_classes;

  std::vector<std::int64_t> label_counts(nc, 0);
  for (int y : labels) ++label_counts[static_cast<std::size_t>(y)];
  const bool all_present =
      std::all_of(label_counts.begin(), label_counts.end(), [](std::int64_t c) { return c > 0; });

  // p(y_n): class-wise sample ratio; add-one smoothed only when a class is
  // missing so its row does not annihilate
  std::vector<double> p_y(nc);
  for (std::size_t n = 0; n < nc; ++n)
    p_y[n] = all_present
                 ? static_cast<double>(label_counts[n]) / static_cast<double>(labels.size())
                 : (static_cast<double>(label_counts[n]) + 1.0) /
                       (static_cast<double>(labels.size()) + static_cast<double>(nc));

  // likelihood L[m][n] = p(yhat_m | y_n)
  std::vector<std::int64_t> pred_given_y(nc * nc, 0);  // [n][m]
  std::vector<std::int64_t> draws_per_class(nc, 0);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    for (int pred : draws[i]) {
      ++pred_given_y[y * nc + static_cast<std::size_t>(pred)];
      ++draws_per_class[y];
    }
  }
  std::vector<double> lik(nc * nc);  // [n][m]
  for (std::size_t n = 0; n < nc; ++n)
    for (std::size_t m = 0; m < nc; ++m)
      lik[n * nc + m] = draws_per_class[n] > 0
                            ? static_cast<double>(pred_given_y[n * nc + m]) /
                                  static_cast<double>(draws_per_class[n])
                            : 1.0 / static_cast<double>(nc);

  // P[n][m] = p(y_n) L[m][n] / sum_n' p(y_n') L[m][n']
  std::vector<double> P(nc * nc, 0.0);
  for (std::size_t m = 0; m < nc; ++m) {
    double denom = 0.0;
    for (std::size_t n = 0; n < nc; ++n) denom += p_y[n] * lik[n * nc + m];
    for (std::size_t n = 0; n < nc; ++n)
      P[n * nc + m] = denom > 0.0 ? p_y[n] * lik[n * nc + m] / denom
                                  : 1.0 / static_cast<double>(nc);
  }
  return P;
}

std::vector<double> confusion_matrix_full(const RegularizedVae& vae,
                                          const std::vector<double>& h,
                                          const std::vector<int>& labels, std::size_t n_mc,
                                          const RngStream& rng) {
  if (labels.empty()) throw ContractError("confusion_matrix_full: labelled pool is empty");
  const auto draws = latent_prediction_draws(vae, h, labels.size(), n_mc, rng);
  return tally_confusion_matrix(draws, labels, vae.num_classes());
}

namespace {

void check_refine_inputs(const std::vector<double>& n_init, const std::vector<double>& P,
                         const AllocatorConfig& config) {
  const std::size_t nc = n_init.size();
  if (nc == 0) throw ContractError("refine_allocation: empty problem");
  if (P.size() != nc * nc) throw ContractError("refine_allocation: P must be Nc x Nc");
  if (config.lambda_alloc < 0.0 || config.lambda_p < 0.0)
    throw ContractError("refine_allocation: penalties must be >= 0");
  for (std::size_t m = 0; m < nc; ++m) {
    double col = 0.0;
    for (std::size_t n = 0; n < nc; ++n) {
      if (P[n * nc + m] < -1e-12)
        throw ContractError("refine_allocation: negative entry in P");
      col += P[n * nc + m];
    }
    if (std::fabs(col - 1.0) > 1e-6)
      throw ContractError("refine_allocation: P column " + std::to_string(m) +
                          " sums to " + std::to_string(col) + ", not 1");
  }
}

std::vector<double> refine_gradient(const std::vector<double>& x,
                                    const std::vector<double>& n_init,
                                    const std::vector<double>& P, double budget,
                                    const AllocatorConfig& config) {
  const std::size_t nc = x.size();
  std::vector<double> px(nc, 0.0);
  for (std::size_t n = 0; n < nc; ++n)
    for (std::size_t m = 0; m < nc; ++m) px[n] += P[n * nc + m] * x[m];
  double sum_x = 0.0;
  for (double v : x) sum_x += v;
  std::vector<double> g(nc, 0.0);
  for (std::size_t m = 0; m < nc; ++m) {
    double acc = 0.0;
    for (std::size_t n = 0; n < nc; ++n) acc += P[n * nc + m] * (px[n] - n_init[n]);
    g[m] = 2.0 * acc + 2.0 * config.lambda_alloc * (x[m] - n_init[m]) +
           2.0 * config.lambda_p * (sum_x - budget);
  }
  return g;
}

}  // namespace

double refine_objective(const std::vector<double>& x, const std::vector<double>& n_init,
                        const std::vector<double>& P, double budget,
                        const AllocatorConfig& config) {
  const std::size_t nc = x.size();
  double e = 0.0;
  for (std::size_t n = 0; n < nc; ++n) {
    double px = 0.0;
    for (std::size_t m = 0; m < nc; ++m) px += P[n * nc + m] * x[m];
    e += (n_init[n] - px) * (n_init[n] - px);
    e += config.lambda_alloc * (n_init[n] - x[n]) * (n_init[n] - x[n]);
  }
  double sum_x = 0.0;
  for (double v : x) sum_x += v;
  e += config.lambda_p * (budget - sum_x) * (budget - sum_x);
  return e;
}

double refine_kkt_residual(const std::vector<double>& x, const std::vector<double>& n_init,
                           const std::vector<double>& P, double budget,
                           const AllocatorConfig& config) {
  const std::vector<double> g = refine_gradient(x, n_init, P, budget, config);
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // free coordinates need zero gradient; bound ones only nonnegative
    const double v = x[i] > 0.0 ? std::fabs(g[i]) : std::max(0.0, -g[i]);
    r = std::max(r, v);
  }
  return r;
}

RefineResult refine_allocation(const std::vector<double>& n_init, const std::vector<double>& P,
                               double budget, const AllocatorConfig& config) {
  check_refine_inputs(n_init, P, config);
  const std::size_t nc = n_init.size();

  // Lipschitz bound of the gradient: 2 (||P||_F^2 + lambda + lambda_p * Nc)
  double frob2 = 0.0;
  for (double v : P) frob2 += v * v;
  const double lip = 2.0 * (frob2 + config.lambda_alloc +
                            config.lambda_p * static_cast<double>(nc));
  const double step = 1.0 / lip;

  std::vector<double> x(nc);
  for (std::size_t i = 0; i < nc; ++i) x[i] = std::max(0.0, n_init[i]);

  RefineResult result;
  result.objective_trace.push_back(refine_objective(x, n_init, P, budget, config));
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    const std::vector<double> g = refine_gradient(x, n_init, P, budget, config);
    std::vector<double> next(nc);
    double gp_norm2 = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
      next[i] = std::max(0.0, x[i] - step * g[i]);
      const double d = (x[i] - next[i]) / step;
      gp_norm2 += d * d;
    }
    x = std::move(next);
    result.objective_trace.push_back(refine_objective(x, n_init, P, budget, config));
    result.iterations = it + 1;
    if (std::sqrt(gp_norm2) < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.allocation = std::move(x);
  return result;
}

std::vector<std::int64_t> round_and_fix(const std::vector<double>& refined, std::int64_t budget,
                                        const std::vector<std::int64_t>& available) {
  const std::size_t nc = refined.size();
  if (available.size() != nc) throw ContractError("round_and_fix: size mismatch");
  if (budget < 0) throw ContractError("round_and_fix: negative budget");
  std::int64_t capacity = 0;
  for (std::int64_t a : available) {
    if (a < 0) throw ContractError("round_and_fix: negative availability");
    capacity += a;
  }
  if (budget > capacity)
    throw ContractError("round_and_fix: budget " + std::to_string(budget) +
                        " exceeds total availability " + std::to_string(capacity));
  for (double v : refined)
    if (v < 0.0 || !std::isfinite(v))
      throw ContractError("round_and_fix: allocation entries must be finite and >= 0");

  std::vector<std::int64_t> alloc(nc);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < nc; ++i) {
    alloc[i] = std::min<std::int64_t>(std::llround(refined[i]), available[i]);
    total += alloc[i];
  }
  // walk classes from the front, one unit at a time, until the sum is exact
  while (total > budget) {
    for (std::size_t i = 0; i < nc && total > budget; ++i)
      if (alloc[i] > 0) {
        --alloc[i];
        --total;
      }
  }
  while (total < budget) {
    for (std::size_t i = 0; i < nc && total < budget; ++i)
      if (alloc[i] < available[i]) {
        ++alloc[i];
        ++total;
      }
  }
  return alloc;
}

}  // namespace vabal
