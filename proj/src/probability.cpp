#include "vabal/probability.hpp"

#include <algorithm>
#include <cmath>

#include "vabal/error.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

std::vector<std::vector<int>> latent_prediction_draws(const RegularizedVae& vae,
                                                      const std::vector<double>& h,
                                                      std::size_t count, std::size_t n_mc,
                                                      const RngStream& rng) {
  const std::size_t dim = vae.input_dim();
  const std::size_t lat = vae.latent_dim();
  if (h.size() != count * dim)
    throw ShapeError("latent_prediction_draws: h buffer does not match count*input_dim");

  // one batched encode, then per-sample stochastic draws
  std::vector<double> mu(count * lat), lv(count * lat);
  if (count > 0) vae.encode(h.data(), count, mu.data(), lv.data());

  std::vector<std::vector<int>> draws(count);
  const LatentPartition& part = vae.partition();
  const EnergyVariant variant = vae.config().variant;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    RngStream stream = rng.substream("sample", static_cast<std::uint64_t>(i));
    const double* mu_i = mu.data() + i * lat;
    const double* lv_i = lv.data() + i * lat;
    std::vector<double> z(lat);
    std::vector<int>& out = draws[static_cast<std::size_t>(i)];
    out.resize(n_mc);
    for (std::size_t l = 0; l < n_mc; ++l) {
      for (std::size_t j = 0; j < lat; ++j)
        z[j] = mu_i[j] + std::exp(0.5 * lv_i[j]) * stream.normal();
      out[l] = static_cast<int>(argmin_energy(class_energies(z, part, variant)));
    }
  }
  return draws;
}

void tally_confusion(const std::vector<std::vector<int>>& draws, const std::vector<int>& labels,
                     std::size_t num_classes, ProbabilityTable& table) {
  if (draws.size() != labels.size())
    throw ContractError("tally_confusion: draws/labels size mismatch");
  table.confusion_match.assign(num_classes, 0);
  table.confusion_pred.assign(num_classes, 0);
  for (std::size_t i = 0; i < draws.size(); ++i)
    for (int pred : draws[i]) {
      ++table.confusion_pred[static_cast<std::size_t>(pred)];
      if (pred == labels[i]) ++table.confusion_match[static_cast<std::size_t>(pred)];
    }
  table.confusion.assign(num_classes, 0.0);
  for (std::size_t n = 0; n < num_classes; ++n)
    table.confusion[n] = table.confusion_pred[n] > 0
                             ? static_cast<double>(table.confusion_match[n]) /
                                   static_cast<double>(table.confusion_pred[n])
                             : 1.0 / static_cast<double>(num_classes);
}

void tally_prior(const std::vector<std::vector<int>>& draws, std::size_t num_classes,
                 ProbabilityTable& table) {
  table.prior_counts.assign(num_classes, 0);
  table.total_draws = 0;
  for (const auto& row : draws)
    for (int pred : row) {
      ++table.prior_counts[static_cast<std::size_t>(pred)];
      ++table.total_draws;
    }
  table.prior.assign(num_classes, 0.0);
  const double denom =
      static_cast<double>(table.total_draws) + static_cast<double>(num_classes);
  for (std::size_t n = 0; n < num_classes; ++n)
    table.prior[n] = (static_cast<double>(table.prior_counts[n]) + 1.0) / denom;
}

std::vector<double> estimate_confusion(const RegularizedVae& vae, const std::vector<double>& h,
                                       const std::vector<int>& labels, std::size_t n_mc,
                                       const RngStream& rng, ProbabilityTable* table) {
  if (labels.empty()) throw ContractError("estimate_confusion: labelled pool is empty");
  const auto draws = latent_prediction_draws(vae, h, labels.size(), n_mc, rng);
  ProbabilityTable local;
  ProbabilityTable& t = table ? *table : local;
  t.n_mc = n_mc;
  tally_confusion(draws, labels, vae.num_classes(), t);
  return t.confusion;
}

std::vector<double> estimate_prior(const RegularizedVae& vae, const std::vector<double>& h,
                                   std::size_t count, std::size_t n_mc, const RngStream& rng,
                                   ProbabilityTable* table) {
  if (count == 0) throw ContractError("estimate_prior: labelled pool is empty");
  const auto draws = latent_prediction_draws(vae, h, count, n_mc, rng);
  ProbabilityTable local;
  ProbabilityTable& t = table ? *table : local;
  t.n_mc = n_mc;
  tally_prior(draws, vae.num_classes(), t);
  return t.prior;
}

UncertaintyScore posterior_uncertainty(const std::vector<double>& log_lik,
                                       const std::vector<double>& confusion,
                                       const std::vector<double>& prior,
                                       std::size_t sample_id) {
  const std::size_t nc = log_lik.size();
  if (nc == 0 || confusion.size() != nc || prior.size() != nc)
    throw ContractError("posterior_uncertainty: per-class vectors must share length");
  for (std::size_t n = 0; n < nc; ++n)
    if (!std::isfinite(log_lik[n]))
      throw NumericError("posterior_uncertainty: non-finite log-likelihood for sample " +
                         (sample_id == kNoSampleId ? std::string("?")
                                                   : std::to_string(sample_id)) +
                         ", class " + std::to_string(n));

  std::vector<double> joint_log(nc);
  for (std::size_t n = 0; n < nc; ++n) {
    if (prior[n] < 0.0) throw ContractError("posterior_uncertainty: negative prior entry");
    joint_log[n] = log_lik[n] + std::log(prior[n]);
  }
  const double lse = logsumexp(joint_log);
  if (!std::isfinite(lse))
    throw NumericError("posterior_uncertainty: degenerate joint terms (all priors zero?)");

  UncertaintyScore s;
  s.id = sample_id;
  s.log_lik = log_lik;
  s.joint_terms.resize(nc);
  double total = 0.0;
  for (std::size_t n = 0; n < nc; ++n) {
    s.joint_terms[n] = confusion[n] * std::exp(joint_log[n] - lse);
    total += s.joint_terms[n];
  }
  s.score = std::min(1.0, std::max(0.0, 1.0 - total));
  return s;
}

std::vector<UncertaintyScore> score_pool(const RegularizedVae& vae,
                                         const MlpClassifier& classifier,
                                         const FeaturePreprocessor& pre, const Pool& pool,
                                         const Dataset& dataset, const ScoreConfig& config,
                                         const RngStream& rng, ProbabilityTable* table_out) {
  const std::size_t nc = vae.num_classes();
  const std::size_t dim = dataset.input_dim;

  ProbabilityTable table;
  table.n_mc = config.n_mc;

  // labelled-side estimates
  {
    const std::size_t nl = pool.labelled.size();
    if (nl == 0) throw ContractError("score_pool: labelled pool is empty");
    std::vector<double> xl(nl * dim);
    std::vector<int> labels(nl);
    for (std::size_t i = 0; i < nl; ++i) {
      std::copy_n(dataset.row(pool.labelled[i]), dim, xl.begin() + i * dim);
      labels[i] = dataset.labels[pool.labelled[i]];
    }
    const std::vector<double> hl = extract_h(classifier, pre, xl.data(), nl);
    estimate_confusion(vae, hl, labels, config.n_mc, rng.substream("confusion"), &table);
    ProbabilityTable prior_table;
    estimate_prior(vae, hl, nl, config.n_mc, rng.substream("prior"), &prior_table);
    table.prior = prior_table.prior;
    table.prior_counts = prior_table.prior_counts;
    table.total_draws = prior_table.total_draws;
  }

  std::vector<double> confusion = table.confusion;
  std::vector<double> prior = table.prior;
  if (config.disable_prior) prior.assign(nc, 1.0 / static_cast<double>(nc));
  if (config.disable_confusion) confusion.assign(nc, 1.0);
  if (table_out) *table_out = table;

  // unlabelled-side likelihoods and scores
  const std::size_t nu = pool.unlabelled.size();
  std::vector<double> xu(nu * dim);
  for (std::size_t i = 0; i < nu; ++i)
    std::copy_n(dataset.row(pool.unlabelled[i]), dim, xu.begin() + i * dim);
  const std::vector<double> hu =
      nu > 0 ? extract_h(classifier, pre, xu.data(), nu) : std::vector<double>{};

  const RngStream lik_root = rng.substream("likelihood");
  std::vector<UncertaintyScore> scores(nu);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nu); ++i) {
    const std::size_t id = pool.unlabelled[static_cast<std::size_t>(i)];
    const double* h = hu.data() + static_cast<std::size_t>(i) * vae.input_dim();
    RngStream sample_stream = lik_root.substream("sample", static_cast<std::uint64_t>(i));
    std::vector<double> log_lik(nc);
    for (std::size_t n = 0; n < nc; ++n) {
      RngStream cls_stream = sample_stream.substream("class", n);
      log_lik[n] = masked_log_likelihood(vae, h, n, config.n_mc, cls_stream);
    }
    UncertaintyScore s = posterior_uncertainty(log_lik, confusion, prior, id);
    if (config.disable_confusion) {
      // likelihood-margin ranking: the plain score degenerates to 0
      const double max_term =
          *std::max_element(s.joint_terms.begin(), s.joint_terms.end());
      s.score = std::min(1.0, std::max(0.0, 1.0 - max_term));
    }
    scores[static_cast<std::size_t>(i)] = std::move(s);
  }
  return scores;
}

}  // namespace vabal
