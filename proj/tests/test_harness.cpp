#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vabal/checkpoint.hpp"
#include "vabal/error.hpp"
#include "vabal/harness.hpp"
#include "vabal/mlp.hpp"

namespace fs = std::filesystem;

using vabal::ExperimentConfig;
using vabal::RunResult;

namespace {

std::string sandbox(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

ExperimentConfig small_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  vabal::MixtureSpec spec;
  spec.num_classes = 2;
  spec.input_dim = 2;
  spec.counts = {80, 80};
  spec.means = {{-3, 0}, {3, 0}};
  spec.stddev = 1.0;
  spec.seed = 5;
  cfg.mixture = spec;
  cfg.strategy = "random";
  cfg.rounds = 2;
  cfg.budget = 10;
  cfg.seeds = {1};
  cfg.classifier.hidden = {8, 8, 8, 8};
  cfg.classifier.epochs = 25;
  cfg.output_dir = out_dir;
  cfg.validate_and_finalize();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config json: parsing, defaults, and unknown keys") {
  const char* text = R"({
    "dataset": {"mixture": {"num_classes": 2, "input_dim": 2,
                 "counts": [10, 10], "means": [[-3, 0], [3, 0]], "seed": 1}},
    "strategy": "vabal",
    "rounds": 3,
    "budget": 5,
    "lambda": 0.01,
    "seeds": [1, 2],
    "classifier": {"epochs": 10},
    "vae": {"epochs": 4}
  })";
  const ExperimentConfig cfg = vabal::config_from_json(text);
  CHECK(cfg.rounds == 3);
  CHECK(cfg.vae.lambda == 0.01);
  CHECK(cfg.vae.epochs == 4);
  CHECK(cfg.classifier.epochs == 10);
  CHECK(cfg.classifier.lr == 1e-3);
  CHECK(cfg.n_mc == 100);

  CHECK_THROWS_WITH_AS(vabal::config_from_json(R"({"bogus": 1})"),
                       doctest::Contains("unknown key 'bogus'"), vabal::ParseError);
  CHECK_THROWS_WITH_AS(
      vabal::config_from_json(R"({"classifier": {"momentum": 0.9}})"),
      doctest::Contains("unknown key 'momentum'"), vabal::ParseError);
  CHECK_THROWS_AS(vabal::config_from_json(R"({"strategy": "banana"})"), vabal::ParseError);

  // round-trip through the emitter
  const ExperimentConfig back = vabal::config_from_json(vabal::config_to_json(cfg));
  CHECK(back.rounds == cfg.rounds);
  CHECK(back.lambda == cfg.lambda);
  CHECK(back.seeds == cfg.seeds);
}

TEST_CASE("config validation failures") {
  auto bad = [](const char* field_json) {
    std::string text = R"({"dataset": {"mixture": {"num_classes": 2, "input_dim": 2,
      "counts": [4, 4], "means": [[-3, 0], [3, 0]], "seed": 1}},)" +
                       std::string(field_json) + "}";
    return text;
  };
  CHECK_THROWS_AS(vabal::config_from_json(bad(R"("rounds": 0)")), vabal::ContractError);
  CHECK_THROWS_AS(vabal::config_from_json(bad(R"("budget": 0)")), vabal::ContractError);
  CHECK_THROWS_AS(vabal::config_from_json(bad(R"("lambda": -1)")), vabal::ContractError);
  CHECK_THROWS_AS(vabal::config_from_json(bad(R"("seeds": [])")), vabal::ContractError);
  CHECK_THROWS_AS(vabal::config_from_json(bad(R"("vae_pool": "nope")")), vabal::ContractError);
  CHECK_THROWS_AS(vabal::config_from_json(bad(R"("strategy": "mc_dropout")")),
                  vabal::ContractError);  // needs dropout > 0
  CHECK_THROWS_AS(vabal::config_from_json(R"({"strategy": "random"})"),
                  vabal::ContractError);  // no dataset at all
}

TEST_CASE("run_experiment: random strategy on a separable mixture") {
  const std::string dir = sandbox("vabal_run_random");
  const ExperimentConfig cfg = small_config(dir);
  const std::vector<RunResult> results = vabal::run_experiment(cfg);
  REQUIRE(results.size() == 1);
  const RunResult& r = results[0];
  REQUIRE(r.records.size() == cfg.rounds + 1);  // per-round records + final retrain
  CHECK(r.records.front().accuracy > 0.9);
  CHECK(r.records.front().labelled == cfg.budget);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].round == i);
    CHECK(r.records[i].labelled == cfg.budget * (i + 1));
    CHECK(r.records[i].accuracy >= 0.0);
    CHECK(r.records[i].accuracy <= 1.0);
  }
  CHECK(fs::exists(fs::path(dir) / "random_seed1.csv"));
}

TEST_CASE("byte-identical reruns for the same config and seed") {
  const std::string d1 = sandbox("vabal_det1");
  const std::string d2 = sandbox("vabal_det2");
  ExperimentConfig c1 = small_config(d1);
  ExperimentConfig c2 = small_config(d2);
  vabal::run_experiment(c1);
  vabal::run_experiment(c2);
  const std::string a = slurp(fs::path(d1) / "random_seed1.csv");
  const std::string b = slurp(fs::path(d2) / "random_seed1.csv");
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("budget exceeding the pool terminates early with a warning") {
  const std::string dir = sandbox("vabal_exhaust");
  ExperimentConfig cfg = small_config(dir);
  cfg.budget = 50;  // train pool is 128; 50 initial + 2x50 > 128
  cfg.rounds = 5;
  cfg.validate_and_finalize();
  const std::vector<RunResult> results = vabal::run_experiment(cfg);
  const RunResult& r = results[0];
  REQUIRE(!r.warnings.empty());
  CHECK(r.warnings[0].find("exhausted") != std::string::npos);
  // all train samples end up labelled
  CHECK(r.records.back().labelled == 128);
}

TEST_CASE("csv header matches the documented schema exactly") {
  CHECK(vabal::record_csv_header(3) ==
        "round,labelled,accuracy,rare_ratio,mean_sel_score,seed,strategy,"
        "count_c0,count_c1,count_c2");
}

TEST_CASE("report: aggregation matches an independent recompute") {
  const std::string dir = sandbox("vabal_report");
  ExperimentConfig cfg = small_config(dir);
  cfg.seeds = {1, 2, 3};
  const auto results = vabal::run_experiment(cfg);
  const vabal::ReportSummary summary = vabal::report(dir);
  REQUIRE(summary.groups.size() == 1);
  const vabal::GroupSummary& g = summary.groups[0];
  CHECK(g.strategy == "random");
  CHECK(g.num_seeds == 3);

  // recompute means/stds straight from the in-memory records
  for (std::size_t ri = 0; ri < g.rounds.size(); ++ri) {
    double sum = 0.0;
    for (const RunResult& r : results) sum += r.records[ri].accuracy;
    const double mean = sum / 3.0;
    double var = 0.0;
    for (const RunResult& r : results)
      var += (r.records[ri].accuracy - mean) * (r.records[ri].accuracy - mean);
    CHECK(g.mean_accuracy[ri] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(g.std_accuracy[ri] == doctest::Approx(std::sqrt(var / 3.0)).epsilon(1e-9));
  }
  double avg = 0.0;
  for (double a : g.mean_accuracy) avg += a;
  CHECK(g.avg_accuracy == doctest::Approx(avg / g.mean_accuracy.size()));
  CHECK(g.final_accuracy == doctest::Approx(g.mean_accuracy.back()));
  CHECK(fs::exists(fs::path(dir) / "aggregate.csv"));
  CHECK(fs::exists(fs::path(dir) / "summary.json"));
}

TEST_CASE("report: single seed gives all-zero std columns") {
  const std::string dir = sandbox("vabal_report1");
  const ExperimentConfig cfg = small_config(dir);
  vabal::run_experiment(cfg);
  const vabal::ReportSummary summary = vabal::report(dir);
  for (double s : summary.groups[0].std_accuracy) CHECK(s == 0.0);
}

TEST_CASE("report: incompatible runs in one group are rejected with offenders") {
  const std::string dir = sandbox("vabal_report_bad");
  ExperimentConfig cfg = small_config(dir);
  vabal::run_experiment(cfg);
  // forge a second file with a different round set
  {
    std::ofstream out(fs::path(dir) / "random_seed9.csv");
    out << vabal::record_csv_header(2) << "\n";
    out << "0,10,0.5,0.5,0,9,random,5,5\n";
  }
  CHECK_THROWS_WITH_AS(vabal::report(dir), doctest::Contains("random_seed9"),
                       vabal::ContractError);
}

TEST_CASE("sweep: a single cell reproduces run_experiment outputs") {
  const std::string d1 = sandbox("vabal_sweep");
  const std::string d2 = sandbox("vabal_sweep_ref");
  ExperimentConfig cfg = small_config(d1);
  const auto swept = vabal::sweep(cfg, "budget", {"10"});
  ExperimentConfig ref = small_config(d2);
  const auto direct = vabal::run_experiment(ref);
  REQUIRE(swept.size() == direct.size());
  for (std::size_t i = 0; i < swept.size(); ++i) {
    REQUIRE(swept[i].records.size() == direct[i].records.size());
    for (std::size_t ri = 0; ri < swept[i].records.size(); ++ri)
      CHECK(swept[i].records[ri].accuracy == direct[i].records[ri].accuracy);
  }
  CHECK(fs::exists(fs::path(d1) / "budget=10" / "random_seed1.csv"));
  CHECK_THROWS_AS(vabal::sweep(cfg, "nonsense", {"1"}), vabal::ContractError);
}

TEST_CASE("checkpoint manifests round-trip parameters exactly") {
  vabal::MlpClassifier model(3, 2, {.hidden = {4, 4}});
  vabal::RngStream rng(81, "ckpt");
  model.init_params(rng);
  const std::string path =
      (fs::temp_directory_path() / "vabal_manifest.json").string();
  vabal::save_manifest(path, model.named_params());

  vabal::MlpClassifier other(3, 2, {.hidden = {4, 4}});
  vabal::load_manifest(path, other.named_params());
  const auto a = model.named_params();
  const auto b = other.named_params();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].second->data == b[i].second->data);

  vabal::MlpClassifier wrong(3, 2, {.hidden = {5, 4}});
  CHECK_THROWS_AS(vabal::load_manifest(path, wrong.named_params()), vabal::Error);
  fs::remove(path);
}

}  // TEST_SUITE
