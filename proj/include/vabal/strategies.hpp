#pragma once

#include <string>
#include <vector>

#include "vabal/allocator.hpp"
#include "vabal/mlp.hpp"
#include "vabal/pool.hpp"
#include "vabal/probability.hpp"

namespace vabal {

/// One round's labelling query. ids are unique members of the unlabelled
/// pool; for score-based strategies they come sorted by descending score
/// (ties by ascending id).
struct QueryResult {
  std::vector<std::size_t> ids;
  std::vector<double> scores;  // aligned with ids
  std::string strategy;
  std::size_t round = 0;
};

/// Top-budget samples by posterior uncertainty.
QueryResult select_vabal(const std::vector<UncertaintyScore>& scores, std::size_t budget);

/// Uniform without replacement.
QueryResult select_random(const Pool& pool, std::size_t budget, RngStream& rng);

/// Rank by Shannon entropy of the classifier's softmax.
QueryResult select_max_entropy(const MlpClassifier& classifier, const Pool& pool,
                               const Dataset& dataset, std::size_t budget);

/// Rank by predictive entropy of the mean over `passes` stochastic dropout
/// forwards. Requires a dropout-enabled classifier.
QueryResult select_mc_dropout(const MlpClassifier& classifier, const Pool& pool,
                              const Dataset& dataset, std::size_t budget, std::size_t passes,
                              RngStream& rng);

/// Experimental class-balanced variant: per-class targets from the allocator
/// (water-fill + refinement through the full confusion matrix), then the
/// top-scoring samples within each predicted class.
QueryResult select_vabal_balanced(const std::vector<UncertaintyScore>& scores,
                                  const std::vector<int>& predicted_classes,
                                  const std::vector<std::int64_t>& labelled_class_counts,
                                  const std::vector<double>& confusion_matrix,
                                  std::size_t budget, const AllocatorConfig& config = {});

}  // namespace vabal
