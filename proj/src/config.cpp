#include "vabal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vabal/error.hpp"

namespace vabal {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ParseError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void maybe(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate_and_finalize() {
  if (mixture.has_value() == !csv_path.empty())
    throw ContractError("config: exactly one of dataset.mixture / dataset.csv is required");
  if (mixture) mixture->validate();

  static const std::set<std::string> strategies = {"vabal", "random", "max_entropy",
                                                   "mc_dropout", "vabal_balanced"};
  if (!strategies.count(strategy))
    throw ContractError("config: unknown strategy '" + strategy + "'");
  if (rounds < 1) throw ContractError("config: rounds must be >= 1");
  if (budget < 1) throw ContractError("config: budget must be >= 1");
  if (lambda < 0.0) throw ContractError("config: lambda must be >= 0");
  if (seeds.empty()) throw ContractError("config: seeds must be nonempty");
  if (n_mc < 1) throw ContractError("config: n_mc must be >= 1");
  if (dims_per_class < 1) throw ContractError("config: dims_per_class must be >= 1");
  if (vae_pool != "current" && vae_pool != "initial")
    throw ContractError("config: vae_pool must be 'current' or 'initial'");
  if (kl_mask != "full" && kl_mask != "exclude-block")
    throw ContractError("config: kl_mask must be 'full' or 'exclude-block'");
  if (strategy == "mc_dropout" && classifier.dropout <= 0.0)
    throw ContractError("config: mc_dropout strategy requires classifier.dropout > 0");

  vae.lambda = lambda;
  vae.variant = energy_variant_from_string(w_variant);
  vae.dims_per_class = dims_per_class;
  vae.kl_mask = kl_mask == "full" ? KlMask::Full : KlMask::ExcludeBlock;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  static const std::set<std::string> top = {
      "dataset",    "strategy",      "rounds",        "budget",
      "lambda",     "w_variant",     "dims_per_class", "n_mc",
      "disable_prior", "disable_confusion", "seeds",  "classifier",
      "vae",        "vae_pool",      "kl_mask",       "mc_dropout_passes",
      "allocator",  "output_dir",    "dump_probabilities", "save_checkpoints"};
  reject_unknown(j, top, "top level");

  ExperimentConfig cfg;
  try {
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      reject_unknown(d, {"mixture", "csv"}, "dataset");
      if (d.contains("mixture")) cfg.mixture = mixture_from_json(d.at("mixture").dump());
      if (d.contains("csv")) cfg.csv_path = d.at("csv").get<std::string>();
    }
    maybe(j, "strategy", cfg.strategy);
    maybe(j, "rounds", cfg.rounds);
    maybe(j, "budget", cfg.budget);
    maybe(j, "lambda", cfg.lambda);
    maybe(j, "w_variant", cfg.w_variant);
    maybe(j, "dims_per_class", cfg.dims_per_class);
    maybe(j, "n_mc", cfg.n_mc);
    maybe(j, "disable_prior", cfg.disable_prior);
    maybe(j, "disable_confusion", cfg.disable_confusion);
    maybe(j, "seeds", cfg.seeds);
    if (j.contains("classifier")) {
      const json& c = j.at("classifier");
      reject_unknown(c, {"hidden", "epochs", "batch_size", "lr", "dropout"}, "classifier");
      maybe(c, "hidden", cfg.classifier.hidden);
      maybe(c, "epochs", cfg.classifier.epochs);
      maybe(c, "batch_size", cfg.classifier.batch_size);
      maybe(c, "lr", cfg.classifier.lr);
      maybe(c, "dropout", cfg.classifier.dropout);
    }
    if (j.contains("vae")) {
      const json& v = j.at("vae");
      reject_unknown(v, {"hidden", "epochs", "batch_size", "lr"}, "vae");
      maybe(v, "hidden", cfg.vae.hidden);
      maybe(v, "epochs", cfg.vae.epochs);
      maybe(v, "batch_size", cfg.vae.batch_size);
      maybe(v, "lr", cfg.vae.lr);
    }
    maybe(j, "vae_pool", cfg.vae_pool);
    maybe(j, "kl_mask", cfg.kl_mask);
    maybe(j, "mc_dropout_passes", cfg.mc_dropout_passes);
    if (j.contains("allocator")) {
      const json& a = j.at("allocator");
      reject_unknown(a, {"lambda_alloc", "lambda_p", "max_iters", "tol"}, "allocator");
      maybe(a, "lambda_alloc", cfg.allocator.lambda_alloc);
      maybe(a, "lambda_p", cfg.allocator.lambda_p);
      maybe(a, "max_iters", cfg.allocator.max_iters);
      maybe(a, "tol", cfg.allocator.tol);
    }
    maybe(j, "output_dir", cfg.output_dir);
    maybe(j, "dump_probabilities", cfg.dump_probabilities);
    maybe(j, "save_checkpoints", cfg.save_checkpoints);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  cfg.validate_and_finalize();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.mixture) j["dataset"]["mixture"] = json::parse(mixture_to_json(*cfg.mixture));
  if (!cfg.csv_path.empty()) j["dataset"]["csv"] = cfg.csv_path;
  j["strategy"] = cfg.strategy;
  j["rounds"] = cfg.rounds;
  j["budget"] = cfg.budget;
  j["lambda"] = cfg.lambda;
  j["w_variant"] = cfg.w_variant;
  j["dims_per_class"] = cfg.dims_per_class;
  j["n_mc"] = cfg.n_mc;
  j["disable_prior"] = cfg.disable_prior;
  j["disable_confusion"] = cfg.disable_confusion;
  j["seeds"] = cfg.seeds;
  j["classifier"] = {{"hidden", cfg.classifier.hidden},
                     {"epochs", cfg.classifier.epochs},
                     {"batch_size", cfg.classifier.batch_size},
                     {"lr", cfg.classifier.lr},
                     {"dropout", cfg.classifier.dropout}};
  j["vae"] = {{"hidden", cfg.vae.hidden},
              {"epochs", cfg.vae.epochs},
              {"batch_size", cfg.vae.batch_size},
              {"lr", cfg.vae.lr}};
  j["vae_pool"] = cfg.vae_pool;
  j["kl_mask"] = cfg.kl_mask;
  j["mc_dropout_passes"] = cfg.mc_dropout_passes;
  j["allocator"] = {{"lambda_alloc", cfg.allocator.lambda_alloc},
                    {"lambda_p", cfg.allocator.lambda_p},
                    {"max_iters", cfg.allocator.max_iters},
                    {"tol", cfg.allocator.tol}};
  j["output_dir"] = cfg.output_dir;
  j["dump_probabilities"] = cfg.dump_probabilities;
  j["save_checkpoints"] = cfg.save_checkpoints;
  return j.dump(2);
}

}  // namespace vabal
