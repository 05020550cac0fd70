#include <doctest.h>

#include <cmath>

#include "vabal/dataset.hpp"
#include "vabal/error.hpp"
#include "vabal/mlp.hpp"
#include "vabal/numeric.hpp"
#include "vabal/preprocessor.hpp"

using vabal::Dataset;
using vabal::FeaturePreprocessor;
using vabal::MixtureSpec;
using vabal::MlpClassifier;

namespace {

Dataset four_class_mixture() {
  MixtureSpec spec;
  spec.num_classes = 4;
  spec.input_dim = 3;
  spec.counts = {100, 100, 100, 100};
  spec.means = {{-3, -3, 0}, {3, -3, 0}, {-3, 3, 0}, {3, 3, 0}};
  spec.stddev = 1.0;
  spec.seed = 11;
  return generate_mixture(spec);
}

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("extract_h has dimension taps x 128 and lives strictly in (0,1)") {
  const Dataset ds = four_class_mixture();
  vabal::MlpConfig cfg;
  cfg.hidden = {64, 64, 64, 64};
  MlpClassifier model(ds.input_dim, ds.num_classes, cfg);
  vabal::RngStream rng(1, "pre");
  model.init_params(rng);

  FeaturePreprocessor pre(model.tap_dims());
  pre.init_params(rng);
  CHECK(pre.output_dim() == 4 * 128);
  CHECK_FALSE(pre.warmed_up());

  // eval before any training batch must fail the warm-up contract
  CHECK_THROWS_WITH_AS(extract_h(model, pre, ds.row(0), 1), doctest::Contains("warmed"),
                       vabal::ContractError);

  // one training batch warms the statistics up
  const std::size_t batch = 32;
  std::vector<double> x(batch * ds.input_dim);
  for (std::size_t i = 0; i < batch; ++i)
    std::copy_n(ds.row(ds.train_ids[i]), ds.input_dim, x.begin() + i * ds.input_dim);
  std::vector<std::vector<double>> taps;
  std::vector<double> logits(batch * ds.num_classes);
  model.forward(x.data(), batch, logits.data(), &taps);
  pre.normalize_train(taps, batch);
  CHECK(pre.warmed_up());

  const std::vector<double> h = extract_h(model, pre, x.data(), batch);
  REQUIRE(h.size() == batch * 512);
  for (double v : h) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  // identical inputs give identical h under eval-mode statistics
  const std::vector<double> h2 = extract_h(model, pre, x.data(), batch);
  CHECK(h == h2);
}

TEST_CASE("normalization statistics are sane after a 256-sample warm-up") {
  const Dataset ds = four_class_mixture();
  vabal::MlpConfig cfg;
  cfg.hidden = {32, 32, 32, 32};
  MlpClassifier model(ds.input_dim, ds.num_classes, cfg);
  vabal::RngStream rng(2, "pre-warm");
  model.init_params(rng);
  FeaturePreprocessor pre(model.tap_dims());
  pre.init_params(rng);

  // warm up on >= 256 samples in batches
  const std::size_t batch = 64;
  for (std::size_t start = 0; start + batch <= 320; start += batch) {
    std::vector<double> x(batch * ds.input_dim);
    for (std::size_t i = 0; i < batch; ++i)
      std::copy_n(ds.row(ds.train_ids[start + i]), ds.input_dim, x.begin() + i * ds.input_dim);
    std::vector<std::vector<double>> taps;
    std::vector<double> logits(batch * ds.num_classes);
    model.forward(x.data(), batch, logits.data(), &taps);
    pre.normalize_train(taps, batch);
  }

  // inference-mode normalized activations on a fresh batch
  const std::size_t eval_n = 64;
  std::vector<double> x(eval_n * ds.input_dim);
  for (std::size_t i = 0; i < eval_n; ++i)
    std::copy_n(ds.row(ds.test_ids[i]), ds.input_dim, x.begin() + i * ds.input_dim);
  std::vector<std::vector<double>> taps;
  std::vector<double> logits(eval_n * ds.num_classes);
  model.forward(x.data(), eval_n, logits.data(), &taps);
  const auto normalized = pre.normalize_eval(taps, eval_n);

  for (const std::vector<double>& tap : normalized) {
    const double m = vabal::mean(tap);
    double var = 0.0;
    for (double v : tap) var += (v - m) * (v - m);
    var /= static_cast<double>(tap.size());
    CHECK(m > -0.5);
    CHECK(m < 0.5);
    CHECK(var > 0.5);
    CHECK(var < 2.0);
  }
}

}  // TEST_SUITE
