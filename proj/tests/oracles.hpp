// Independent reference implementations used only by tests. Everything here
// recomputes expected values by a route the library under test does not use:
// finite differences, quadrature, exhaustive enumeration, or direct solves.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace oracles {

/// Mixed absolute/relative error, absolute below 1.
inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// Central finite differences of a scalar function of a flat vector.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// KL(N(mu, e^lv) || N(0,1)) for one dimension by trapezoid quadrature of
/// q log(q/p) over an 8-sigma window.
inline double kl_gaussian_quadrature_1d(double mu, double log_var, std::size_t grid = 20000) {
  const double sigma = std::exp(0.5 * log_var);
  const double lo = mu - 8.0 * sigma;
  const double hi = mu + 8.0 * sigma;
  const double dx = (hi - lo) / static_cast<double>(grid);
  auto integrand = [&](double x) {
    const double q = std::exp(-(x - mu) * (x - mu) / (2.0 * sigma * sigma)) /
                     (sigma * std::sqrt(2.0 * M_PI));
    const double log_q = -(x - mu) * (x - mu) / (2.0 * sigma * sigma) -
                         std::log(sigma * std::sqrt(2.0 * M_PI));
    const double log_p = -x * x / 2.0 - 0.5 * std::log(2.0 * M_PI);
    return q * (log_q - log_p);
  };
  double acc = 0.5 * (integrand(lo) + integrand(hi));
  for (std::size_t i = 1; i < grid; ++i) acc += integrand(lo + dx * static_cast<double>(i));
  return acc * dx;
}

/// logsumexp in extended precision.
inline double logsumexp_long_double(const std::vector<double>& v) {
  long double m = v[0];
  for (double x : v) m = std::max<long double>(m, x);
  long double acc = 0.0L;
  for (double x : v) acc += expl(static_cast<long double>(x) - m);
  return static_cast<double>(m + logl(acc));
}

/// Bayes-optimal rule for isotropic equal-covariance Gaussians: nearest mean.
inline int nearest_mean_label(const double* x, const std::vector<std::vector<double>>& means) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means.size(); ++c) {
    double d = 0.0;
    for (std::size_t j = 0; j < means[c].size(); ++j)
      d += (x[j] - means[c][j]) * (x[j] - means[c][j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

/// Enumerate every way to write `budget` as an ordered sum of `parts`
/// nonnegative integers and apply fn to each composition.
inline void for_each_composition(std::int64_t budget, std::size_t parts,
                                 std::vector<std::int64_t>& buffer,
                                 const std::function<void(const std::vector<std::int64_t>&)>& fn,
                                 std::size_t at = 0) {
  if (at + 1 == parts) {
    buffer[at] = budget;
    fn(buffer);
    return;
  }
  for (std::int64_t v = 0; v <= budget; ++v) {
    buffer[at] = v;
    for_each_composition(budget - v, parts, buffer, fn, at + 1);
  }
}

/// Smallest achievable (max - min) of counts + allocation over all integer
/// allocations of the budget.
inline std::int64_t best_balance_by_enumeration(const std::vector<std::int64_t>& counts,
                                                std::int64_t budget) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> buf(counts.size());
  for_each_composition(budget, counts.size(), buf, [&](const std::vector<std::int64_t>& alloc) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      lo = std::min(lo, counts[i] + alloc[i]);
      hi = std::max(hi, counts[i] + alloc[i]);
    }
    best = std::min(best, hi - lo);
  });
  return best;
}

/// Exact solver for min ||n - P x||^2 + la ||n - x||^2 + lp (b - sum x)^2,
/// x >= 0, by enumerating active sets (meant for tiny Nc). Solves the free
/// subsystem by Gaussian elimination and checks KKT on the bound variables.
inline std::vector<double> nnls_active_set_exact(const std::vector<double>& n_init,
                                                 const std::vector<double>& P, double budget,
                                                 double lambda_alloc, double lambda_p) {
  const std::size_t nc = n_init.size();
  // H = 2 (P^T P + la I + lp 1 1^T), g0 = -2 (P^T n + la n + lp b 1)
  std::vector<double> H(nc * nc, 0.0), g0(nc, 0.0);
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t j = 0; j < nc; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nc; ++k) acc += P[k * nc + i] * P[k * nc + j];
      H[i * nc + j] = 2.0 * (acc + (i == j ? lambda_alloc : 0.0) + lambda_p);
    }
  for (std::size_t i = 0; i < nc; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nc; ++k) acc += P[k * nc + i] * n_init[k];
    g0[i] = -2.0 * (acc + lambda_alloc * n_init[i] + lambda_p * budget);
  }

  auto solve_dense = [](std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
      for (std::size_t c = 0; c < n; ++c) std::swap(A[col * n + c], A[piv * n + c]);
      std::swap(b[col], b[piv]);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const double f = A[r * n + col] / A[col * n + col];
        for (std::size_t c = 0; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
        b[r] -= f * b[col];
      }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= A[i * n + i];
    return b;
  };

  for (std::size_t mask = 0; mask < (1u << nc); ++mask) {
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < nc; ++i)
      if (mask & (1u << i)) free_idx.push_back(i);
    std::vector<double> x(nc, 0.0);
    if (!free_idx.empty()) {
      const std::size_t f = free_idx.size();
      std::vector<double> Hf(f * f), bf(f);
      for (std::size_t a = 0; a < f; ++a) {
        bf[a] = -g0[free_idx[a]];
        for (std::size_t b = 0; b < f; ++b) Hf[a * f + b] = H[free_idx[a] * nc + free_idx[b]];
      }
      const std::vector<double> xf = solve_dense(Hf, bf);
      bool feasible = true;
      for (double v : xf)
        if (v < -1e-10) feasible = false;
      if (!feasible) continue;
      for (std::size_t a = 0; a < f; ++a) x[free_idx[a]] = std::max(0.0, xf[a]);
    }
    // KKT: gradient nonnegative on the bound variables
    bool ok = true;
    for (std::size_t i = 0; i < nc && ok; ++i) {
      if (mask & (1u << i)) continue;
      double gi = g0[i];
      for (std::size_t j = 0; j < nc; ++j) gi += H[i * nc + j] * x[j];
      if (gi < -1e-8) ok = false;
    }
    if (ok) return x;
  }
  return std::vector<double>(nc, 0.0);  // unreachable for a convex problem
}

}  // namespace oracles
