#include <doctest.h>

#include <cmath>

#include "vabal/dataset.hpp"
#include "vabal/error.hpp"
#include "vabal/mlp.hpp"
#include "vabal/numeric.hpp"
#include "vabal/pool.hpp"
#include "vabal/probability.hpp"

using vabal::ProbabilityTable;
using vabal::RegularizedVae;
using vabal::UncertaintyScore;

TEST_SUITE("probability") {

TEST_CASE("tally_confusion: exhaustive replay oracle") {
  // recorded draw log: 3 samples x 4 draws, 3 classes
  const std::vector<std::vector<int>> draws = {{0, 0, 1, 0}, {1, 1, 0, 1}, {2, 2, 2, 2}};
  const std::vector<int> labels = {0, 1, 2};
  ProbabilityTable t;
  tally_confusion(draws, labels, 3, t);

  // brute-force tally over every (sample, draw) pair
  std::vector<std::int64_t> num(3, 0), den(3, 0);
  for (std::size_t i = 0; i < draws.size(); ++i)
    for (int pred : draws[i]) {
      ++den[pred];
      if (pred == labels[i]) ++num[pred];
    }
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(t.confusion_pred[n] == den[n]);
    CHECK(t.confusion_match[n] == num[n]);
    CHECK(t.confusion[n] ==
          doctest::Approx(static_cast<double>(num[n]) / static_cast<double>(den[n])));
  }
}

TEST_CASE("confusion: always-correct draws give all ones") {
  const std::vector<std::vector<int>> draws = {{0, 0}, {1, 1}, {2, 2}};
  const std::vector<int> labels = {0, 1, 2};
  ProbabilityTable t;
  tally_confusion(draws, labels, 3, t);
  CHECK(t.confusion == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("confusion: single sample, never-predicted classes fall back to 1/Nc") {
  // one labelled class-0 sample; 60 of 100 draws predict 0, 40 predict 1
  std::vector<int> row;
  for (int i = 0; i < 60; ++i) row.push_back(0);
  for (int i = 0; i < 40; ++i) row.push_back(1);
  ProbabilityTable t;
  tally_confusion({row}, {0}, 3, t);
  CHECK(t.confusion[0] == 1.0);        // all draws predicting 0 match the true label
  CHECK(t.confusion[1] == 0.0);        // predicted but never correct
  CHECK(t.confusion[2] == doctest::Approx(1.0 / 3.0));  // never predicted: fallback
}

TEST_CASE("prior: add-one smoothing arithmetic") {
  // all 100 draws predict class 0, two classes
  std::vector<std::vector<int>> draws(10, std::vector<int>(10, 0));
  ProbabilityTable t;
  tally_prior(draws, 2, t);
  CHECK(t.total_draws == 100);
  CHECK(t.prior[0] == doctest::Approx(101.0 / 102.0));
  CHECK(t.prior[1] == doctest::Approx(1.0 / 102.0));
  CHECK(t.prior[0] + t.prior[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("prior: uniform draws give the uniform prior") {
  const std::vector<std::vector<int>> draws = {{0, 1, 2}, {2, 0, 1}};
  ProbabilityTable t;
  tally_prior(draws, 3, t);
  for (double p : t.prior) CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("prior: smoothing shifts frequencies by at most Nc / total") {
  vabal::RngStream rng(51, "prior-sm");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nc = 2 + rng.uniform_below(4);
    std::vector<std::vector<int>> draws(5, std::vector<int>(20));
    for (auto& row : draws)
      for (int& v : row) v = static_cast<int>(rng.uniform_below(nc));
    ProbabilityTable t;
    tally_prior(draws, nc, t);
    for (std::size_t n = 0; n < nc; ++n) {
      const double unsmoothed = static_cast<double>(t.prior_counts[n]) /
                                static_cast<double>(t.total_draws);
      CHECK(std::fabs(t.prior[n] - unsmoothed) <=
            static_cast<double>(nc) / static_cast<double>(t.total_draws) + 1e-12);
    }
  }
}

TEST_CASE("estimate_* draws replay exactly under the same stream") {
  vabal::RngStream rng(52, "replay");
  RegularizedVae vae(6, 3, {.hidden = 8, .dims_per_class = 2});
  vae.init_params(rng);
  std::vector<double> h(4 * 6);
  for (double& v : h) v = rng.uniform();
  const std::vector<int> labels = {0, 1, 2, 0};

  const auto draws = latent_prediction_draws(vae, h, 4, 25, rng.substream("mc"));
  ProbabilityTable expect;
  tally_confusion(draws, labels, 3, expect);
  ProbabilityTable got;
  estimate_confusion(vae, h, labels, 25, rng.substream("mc"), &got);
  CHECK(got.confusion == expect.confusion);
  CHECK(got.confusion_pred == expect.confusion_pred);

  ProbabilityTable expect_p, got_p;
  tally_prior(draws, 3, expect_p);
  estimate_prior(vae, h, 4, 25, rng.substream("mc"), &got_p);
  CHECK(got_p.prior == expect_p.prior);
  CHECK(got_p.total_draws == 25 * 4);
}

TEST_CASE("posterior_uncertainty anchors") {
  // confusion identically one forces score 0 whatever the other terms are
  vabal::RngStream rng(53, "post");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ll(3), prior(3);
    for (double& v : ll) v = rng.normal() * 10.0;
    double z = 0.0;
    for (double& v : prior) {
      v = rng.uniform() + 0.01;
      z += v;
    }
    for (double& v : prior) v /= z;
    const UncertaintyScore s = posterior_uncertainty(ll, {1.0, 1.0, 1.0}, prior);
    CHECK(s.score == doctest::Approx(0.0).epsilon(1e-12));
  }

  // two classes, equal joint weights, confusion (.8, .6): score = 0.3
  const UncertaintyScore s =
      posterior_uncertainty({-1.0, -1.0}, {0.8, 0.6}, {0.5, 0.5});
  CHECK(s.score == doctest::Approx(0.3));
  CHECK(s.joint_terms[0] == doctest::Approx(0.4));
  CHECK(s.joint_terms[1] == doctest::Approx(0.3));
  // diagnostics reconstruct the score
  CHECK(1.0 - (s.joint_terms[0] + s.joint_terms[1]) == doctest::Approx(s.score).epsilon(1e-9));
}

TEST_CASE("posterior_uncertainty: constant log-likelihood shifts cancel") {
  vabal::RngStream rng(54, "post-shift");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nc = 2 + rng.uniform_below(4);
    std::vector<double> ll(nc), conf(nc), prior(nc);
    double z = 0.0;
    for (std::size_t n = 0; n < nc; ++n) {
      ll[n] = rng.normal() * 5.0;
      conf[n] = rng.uniform();
      prior[n] = rng.uniform() + 0.01;
      z += prior[n];
    }
    for (double& v : prior) v /= z;
    const double base = posterior_uncertainty(ll, conf, prior).score;
    const double shift = (rng.uniform() - 0.5) * 100.0;
    std::vector<double> shifted = ll;
    for (double& v : shifted) v += shift;
    CHECK(std::fabs(posterior_uncertainty(shifted, conf, prior).score - base) <= 1e-12);
  }
}

TEST_CASE("posterior_uncertainty error contracts") {
  CHECK_THROWS_WITH_AS(
      posterior_uncertainty({1.0, std::nan("")}, {1.0, 1.0}, {0.5, 0.5}, 17),
      doctest::Contains("sample 17"), vabal::NumericError);
  CHECK_THROWS_WITH_AS(posterior_uncertainty({std::log(0.5), -INFINITY}, {1, 1}, {0.5, 0.5}),
                       doctest::Contains("class 1"), vabal::NumericError);
  CHECK_THROWS_AS(posterior_uncertainty({1.0}, {1.0, 1.0}, {0.5, 0.5}), vabal::ContractError);
}

TEST_CASE("score_pool composes exactly from the three estimators") {
  vabal::MixtureSpec spec;
  spec.num_classes = 2;
  spec.input_dim = 3;
  spec.counts = {40, 40};
  spec.means = {{-3, 0, 0}, {3, 0, 0}};
  spec.stddev = 1.0;
  spec.seed = 19;
  const vabal::Dataset ds = generate_mixture(spec);

  vabal::RngStream rng(55, "compose");
  vabal::Pool pool = vabal::Pool::initial(ds, 12, rng);

  vabal::MlpConfig mcfg;
  mcfg.hidden = {8, 8, 8, 8};
  vabal::MlpClassifier clf(ds.input_dim, ds.num_classes, mcfg);
  train_classifier(clf, pool, ds, 15, rng.substream("clf"));

  vabal::FeaturePreprocessor pre(clf.tap_dims(), {.proj_dim = 8});
  RegularizedVae vae(pre.output_dim(), ds.num_classes, {.hidden = 16, .dims_per_class = 3});
  train_vae(vae, pre, clf, ds, pool.unlabelled, 2, rng.substream("vae"));

  vabal::ScoreConfig sc;
  sc.n_mc = 20;
  const vabal::RngStream score_rng = rng.substream("score");
  vabal::ProbabilityTable table;
  const auto scores = score_pool(vae, clf, pre, pool, ds, sc, score_rng, &table);
  REQUIRE(scores.size() == pool.unlabelled.size());

  // hand-compose the same pipeline for a few samples
  const std::size_t nl = pool.labelled.size();
  std::vector<double> xl(nl * ds.input_dim);
  std::vector<int> yl(nl);
  for (std::size_t i = 0; i < nl; ++i) {
    std::copy_n(ds.row(pool.labelled[i]), ds.input_dim, xl.begin() + i * ds.input_dim);
    yl[i] = ds.labels[pool.labelled[i]];
  }
  const std::vector<double> hl = extract_h(clf, pre, xl.data(), nl);
  const std::vector<double> conf =
      estimate_confusion(vae, hl, yl, sc.n_mc, score_rng.substream("confusion"));
  const std::vector<double> prior =
      estimate_prior(vae, hl, nl, sc.n_mc, score_rng.substream("prior"));

  for (std::size_t i : {std::size_t{0}, std::size_t{3}, scores.size() - 1}) {
    const std::size_t id = pool.unlabelled[i];
    const std::vector<double> hu = extract_h(clf, pre, ds.row(id), 1);
    vabal::RngStream sample_stream =
        score_rng.substream("likelihood").substream("sample", i);
    std::vector<double> ll(2);
    for (std::size_t n = 0; n < 2; ++n) {
      vabal::RngStream cls = sample_stream.substream("class", n);
      ll[n] = masked_log_likelihood(vae, hu.data(), n, sc.n_mc, cls);
    }
    const UncertaintyScore manual = posterior_uncertainty(ll, conf, prior, id);
    CHECK(std::fabs(manual.score - scores[i].score) <= 1e-12);
    CHECK(manual.id == scores[i].id);
  }

  for (const auto& s : scores) {
    CHECK(s.score >= 0.0);
    CHECK(s.score <= 1.0);
  }
}

TEST_CASE("ablation switches: uniform prior and unit confusion") {
  vabal::MixtureSpec spec;
  spec.num_classes = 2;
  spec.input_dim = 3;
  spec.counts = {30, 30};
  spec.means = {{-3, 0, 0}, {3, 0, 0}};
  spec.stddev = 1.0;
  spec.seed = 23;
  const vabal::Dataset ds = generate_mixture(spec);
  vabal::RngStream rng(56, "ablate");
  vabal::Pool pool = vabal::Pool::initial(ds, 10, rng);
  vabal::MlpConfig mcfg;
  mcfg.hidden = {8, 8, 8, 8};
  vabal::MlpClassifier clf(ds.input_dim, ds.num_classes, mcfg);
  train_classifier(clf, pool, ds, 10, rng.substream("clf"));
  vabal::FeaturePreprocessor pre(clf.tap_dims(), {.proj_dim = 8});
  RegularizedVae vae(pre.output_dim(), ds.num_classes, {.hidden = 16, .dims_per_class = 3});
  train_vae(vae, pre, clf, ds, pool.unlabelled, 2, rng.substream("vae"));

  vabal::ScoreConfig sc;
  sc.n_mc = 10;
  sc.disable_prior = true;
  sc.disable_confusion = true;
  const auto scores = score_pool(vae, clf, pre, pool, ds, sc, rng.substream("score"));
  for (const auto& s : scores) {
    // joint terms are plain softmax weights: they sum to one...
    double total = 0.0;
    for (double t : s.joint_terms) total += t;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    // ...and the margin score replaces the degenerate 1 - sum = 0
    double max_term = 0.0;
    for (double t : s.joint_terms) max_term = std::max(max_term, t);
    CHECK(s.score == doctest::Approx(1.0 - max_term).epsilon(1e-12));
    CHECK(s.score >= 0.0);
    CHECK(s.score <= 1.0);
  }
}

}  // TEST_SUITE
