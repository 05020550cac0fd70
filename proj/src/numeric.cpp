#include "vabal/numeric.hpp"

#include <algorithm>

#include "vabal/error.hpp"

namespace vabal {

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw ContractError("logsumexp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;  // all -inf, or a stray +inf/NaN propagates
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

void softmax_row(double* values, std::size_t n) {
  double m = values[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, values[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // floor the shifted exponent so outputs stay strictly positive
    values[i] = std::exp(std::max(values[i] - m, -700.0));
    sum += values[i];
  }
  for (std::size_t i = 0; i < n; ++i) values[i] /= sum;
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mu = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(values.size()));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::size_t argmin(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best]) best = i;
  return best;
}

}  // namespace vabal
