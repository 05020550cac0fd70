#pragma once

#include <cstddef>
#include <vector>

#include "vabal/dataset.hpp"
#include "vabal/rng.hpp"

namespace vabal {

/// Disjoint partition of the training ids into labelled and unlabelled sets.
/// Insertion order is preserved on both sides so selection histories replay
/// exactly.
struct Pool {
  std::vector<std::size_t> labelled;
  std::vector<std::size_t> unlabelled;
  std::size_t round = 0;

  static Pool all_unlabelled(const Dataset& dataset);

  /// Start a pool with n uniformly chosen labelled samples.
  static Pool initial(const Dataset& dataset, std::size_t n, RngStream& rng);

  bool is_partition_of(const std::vector<std::size_t>& train_ids) const;
};

/// Move selected ids from the unlabelled to the labelled side and advance the
/// round counter. Pure: the input pool is untouched.
Pool transfer(const Pool& pool, const std::vector<std::size_t>& selected_ids);

}  // namespace vabal
