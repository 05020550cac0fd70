#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace vabal {

/// log(sum_i exp(v_i)) computed by shifting by the maximum. Exact for a
/// single element; throws ContractError on an empty span.
double logsumexp(std::span<const double> values);

/// In-place stable softmax of one row. Every output is strictly positive.
void softmax_row(double* values, std::size_t n);

/// Shannon entropy of a probability vector (natural log); 0*log0 := 0.
double shannon_entropy(std::span<const double> probs);

bool all_finite(std::span<const double> values);

double mean(std::span<const double> values);
/// Population standard deviation (divides by n).
double stddev(std::span<const double> values);

std::size_t argmax(std::span<const double> values);
/// Ties broken toward the lowest index.
std::size_t argmin(std::span<const double> values);

}  // namespace vabal
