#include "vabal/strategies.hpp"

#include <algorithm>
#include <cmath>

#include "vabal/error.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

namespace {

/// Sort (score, id) pairs by score descending, id ascending, and keep the
/// first `budget`.
QueryResult top_by_score(std::vector<std::pair<double, std::size_t>> scored,
                         std::size_t budget, const char* name) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  QueryResult q;
  q.strategy = name;
  const std::size_t n = std::min(budget, scored.size());
  q.ids.reserve(n);
  q.scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    q.ids.push_back(scored[i].second);
    q.scores.push_back(scored[i].first);
  }
  return q;
}

void check_budget(std::size_t budget, const char* name) {
  if (budget == 0) throw ContractError(std::string(name) + ": budget must be positive");
}

}  // namespace

QueryResult select_vabal(const std::vector<UncertaintyScore>& scores, std::size_t budget) {
  check_budget(budget, "select_vabal");
  if (scores.empty()) throw ContractError("select_vabal: no scores");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(scores.size());
  for (const UncertaintyScore& s : scores) scored.emplace_back(s.score, s.id);
  return top_by_score(std::move(scored), budget, "vabal");
}

QueryResult select_random(const Pool& pool, std::size_t budget, RngStream& rng) {
  check_budget(budget, "select_random");
  std::vector<std::size_t> ids = pool.unlabelled;
  const std::size_t n = std::min(budget, ids.size());
  for (std::size_t i = 0; i < n; ++i)
    std::swap(ids[i], ids[i + rng.uniform_below(ids.size() - i)]);
  ids.resize(n);
  QueryResult q;
  q.strategy = "random";
  q.ids = std::move(ids);
  q.scores.assign(n, 0.0);
  return q;
}

QueryResult select_max_entropy(const MlpClassifier& classifier, const Pool& pool,
                               const Dataset& dataset, std::size_t budget) {
  check_budget(budget, "select_max_entropy");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool.unlabelled.size());
  for (std::size_t id : pool.unlabelled) {
    const std::vector<double> p = classifier.predict_proba(dataset.row(id));
    scored.emplace_back(shannon_entropy(p), id);
  }
  QueryResult q = top_by_score(std::move(scored), budget, "max_entropy");
  return q;
}

QueryResult select_mc_dropout(const MlpClassifier& classifier, const Pool& pool,
                              const Dataset& dataset, std::size_t budget, std::size_t passes,
                              RngStream& rng) {
#ifndef VABAL_HAS_MC_DROPOUT
  (void)classifier;
  (void)pool;
  (void)dataset;
  (void)budget;
  (void)passes;
  (void)rng;
  throw ContractError("select_mc_dropout: built without MC-dropout support");
#else
  check_budget(budget, "select_mc_dropout");
  if (!classifier.has_dropout())
    throw ContractError("select_mc_dropout: classifier was trained without dropout");
  if (passes == 0) throw ContractError("select_mc_dropout: passes must be positive");

  const std::size_t nu = pool.unlabelled.size();
  const std::size_t nc = classifier.num_classes();
  const std::size_t dim = classifier.input_dim();
  std::vector<double> x(nu * dim);
  for (std::size_t i = 0; i < nu; ++i)
    std::copy_n(dataset.row(pool.unlabelled[i]), dim, x.begin() + i * dim);

  std::vector<double> mean_probs(nu * nc, 0.0);
  std::vector<double> logits(nu * nc);
  RngStream mask_stream = rng.substream("mc-dropout");
  for (std::size_t t = 0; t < passes; ++t) {
    classifier.forward(x.data(), nu, logits.data(), nullptr, &mask_stream);
    for (std::size_t i = 0; i < nu; ++i) {
      softmax_row(logits.data() + i * nc, nc);
      for (std::size_t c = 0; c < nc; ++c) mean_probs[i * nc + c] += logits[i * nc + c];
    }
  }
  for (double& v : mean_probs) v /= static_cast<double>(passes);

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(nu);
  for (std::size_t i = 0; i < nu; ++i)
    scored.emplace_back(shannon_entropy({mean_probs.data() + i * nc, nc}), pool.unlabelled[i]);
  return top_by_score(std::move(scored), budget, "mc_dropout");
#endif
}

QueryResult select_vabal_balanced(const std::vector<UncertaintyScore>& scores,
                                  const std::vector<int>& predicted_classes,
                                  const std::vector<std::int64_t>& labelled_class_counts,
                                  const std::vector<double>& confusion_matrix,
                                  std::size_t budget, const AllocatorConfig& config) {
  check_budget(budget, "select_vabal_balanced");
  if (scores.size() != predicted_classes.size())
    throw ContractError("select_vabal_balanced: scores/predictions size mismatch");
  const std::size_t nc = labelled_class_counts.size();

  std::vector<std::int64_t> available(nc, 0);
  for (int c : predicted_classes) ++available[static_cast<std::size_t>(c)];

  const std::size_t effective = std::min<std::size_t>(budget, scores.size());
  const std::vector<std::int64_t> init = water_fill(labelled_class_counts,
                                                    static_cast<std::int64_t>(effective));
  std::vector<double> init_d(init.begin(), init.end());
  const RefineResult refined =
      refine_allocation(init_d, confusion_matrix, static_cast<double>(effective), config);
  const std::vector<std::int64_t> alloc =
      round_and_fix(refined.allocation, static_cast<std::int64_t>(effective), available);

  // per predicted class, the highest-uncertainty samples
  std::vector<std::vector<std::pair<double, std::size_t>>> buckets(nc);
  for (std::size_t i = 0; i < scores.size(); ++i)
    buckets[static_cast<std::size_t>(predicted_classes[i])].emplace_back(scores[i].score,
                                                                         scores[i].id);
  std::vector<std::pair<double, std::size_t>> chosen;
  for (std::size_t c = 0; c < nc; ++c) {
    auto& bucket = buckets[c];
    std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t i = 0; i < static_cast<std::size_t>(alloc[c]); ++i)
      chosen.push_back(bucket[i]);
  }
  QueryResult q = top_by_score(std::move(chosen), effective, "vabal_balanced");
  return q;
}

}  // namespace vabal
