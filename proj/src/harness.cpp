#include "vabal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vabal/checkpoint.hpp"
#include "vabal/error.hpp"
#include "vabal/numeric.hpp"
#include "vabal/probability.hpp"
#include "vabal/strategies.hpp"

namespace vabal {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::size_t dominant_class(const Dataset& dataset) {
  const std::vector<std::int64_t> counts = dataset.train_class_counts();
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

double minority_fraction(const std::vector<std::int64_t>& class_counts, std::size_t dominant) {
  std::int64_t total = 0;
  for (std::int64_t c : class_counts) total += c;
  if (total == 0) return 0.0;
  return 1.0 - static_cast<double>(class_counts[dominant]) / static_cast<double>(total);
}

}  // namespace

std::string record_csv_header(std::size_t num_classes) {
  std::string h = "round,labelled,accuracy,rare_ratio,mean_sel_score,seed,strategy";
  for (std::size_t c = 0; c < num_classes; ++c) h += ",count_c" + std::to_string(c);
  return h;
}

std::string record_csv_line(const RoundRecord& r) {
  std::string line = std::to_string(r.round) + "," + std::to_string(r.labelled) + "," +
                     fmt(r.accuracy) + "," + fmt(r.rare_ratio) + "," + fmt(r.mean_sel_score) +
                     "," + std::to_string(r.seed) + "," + r.strategy;
  for (std::int64_t c : r.class_counts) line += "," + std::to_string(c);
  return line;
}

Dataset build_dataset(const ExperimentConfig& config) {
  if (config.mixture) return generate_mixture(*config.mixture);
  std::vector<std::string> warnings;
  Dataset ds = load_csv(config.csv_path, &warnings);
  RngStream split_rng(0x5157ULL, "csv-split");
  ds.stratified_split(0.2, split_rng);
  return ds;
}

namespace {

struct VaePipeline {
  RegularizedVae vae;
  FeaturePreprocessor pre;
};

/// Train the VAE + preprocessor for this round and score the unlabelled pool.
std::vector<UncertaintyScore> vabal_scores(const ExperimentConfig& config,
                                           const Dataset& dataset,
                                           const MlpClassifier& classifier, const Pool& pool,
                                           const std::vector<std::size_t>& vae_pool_ids,
                                           const RngStream& round_rng, VaePipeline& pipe,
                                           ProbabilityTable* table_out) {
  RngStream vae_rng = round_rng.substream("vae-train");
  train_vae(pipe.vae, pipe.pre, classifier, dataset, vae_pool_ids, pipe.vae.config().epochs,
            vae_rng);
  ScoreConfig sc;
  sc.n_mc = config.n_mc;
  sc.disable_prior = config.disable_prior;
  sc.disable_confusion = config.disable_confusion;
  return score_pool(pipe.vae, classifier, pipe.pre, pool, dataset, sc,
                    round_rng.substream("score"), table_out);
}

void dump_probability_csv(const std::string& path, const std::vector<UncertaintyScore>& scores,
                          const ProbabilityTable& table, std::size_t nc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "sample_id,score";
  for (std::size_t c = 0; c < nc; ++c) out << ",log_lik_" << c;
  for (std::size_t c = 0; c < nc; ++c) out << ",prior_" << c;
  for (std::size_t c = 0; c < nc; ++c) out << ",confusion_" << c;
  out << "\n";
  for (const UncertaintyScore& s : scores) {
    out << s.id << "," << fmt(s.score);
    for (std::size_t c = 0; c < nc; ++c) out << "," << fmt(s.log_lik[c]);
    for (std::size_t c = 0; c < nc; ++c) out << "," << fmt(table.prior[c]);
    for (std::size_t c = 0; c < nc; ++c) out << "," << fmt(table.confusion[c]);
    out << "\n";
  }
}

}  // namespace

RunResult run_single(const ExperimentConfig& config, const Dataset& dataset,
                     std::uint64_t seed, const std::string& csv_path) {
  RunResult result;
  result.seed = seed;

  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    if (!csv) throw Error("run_single: cannot open " + csv_path + " for writing");
    csv << record_csv_header(dataset.num_classes) << "\n" << std::flush;
  }
  auto emit = [&](const RoundRecord& rec) {
    result.records.push_back(rec);
    if (csv.is_open()) csv << record_csv_line(rec) << "\n" << std::flush;
  };

  RngStream root(seed, "experiment");
  RngStream init_rng = root.substream("init-pool");
  Pool pool = Pool::initial(dataset, config.budget, init_rng);
  const std::vector<std::size_t> initial_unlabelled = pool.unlabelled;
  const std::size_t dominant = dominant_class(dataset);

  MlpClassifier classifier(dataset.input_dim, dataset.num_classes, config.classifier);
  FeaturePreprocessor pre(classifier.tap_dims());
  VaePipeline pipe{RegularizedVae(pre.output_dim(), dataset.num_classes, config.vae),
                   std::move(pre)};

  const bool needs_vae = config.strategy == "vabal" || config.strategy == "vabal_balanced";

  std::size_t r = 0;
  for (; r < config.rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream round_rng = root.substream("round", r);
    try {
      RngStream clf_rng = round_rng.substream("classifier");
      train_classifier(classifier, pool, dataset, config.classifier.epochs, clf_rng);
      const double accuracy = evaluate_accuracy(classifier, dataset, dataset.test_ids);

      QueryResult query;
      ProbabilityTable table;
      if (config.strategy == "random") {
        RngStream sel = round_rng.substream("select");
        query = select_random(pool, config.budget, sel);
      } else if (config.strategy == "max_entropy") {
        query = select_max_entropy(classifier, pool, dataset, config.budget);
      } else if (config.strategy == "mc_dropout") {
        RngStream sel = round_rng.substream("mc-dropout");
        query = select_mc_dropout(classifier, pool, dataset, config.budget,
                                  config.mc_dropout_passes, sel);
      } else {
        const std::vector<std::size_t>& vae_ids =
            config.vae_pool == "initial" ? initial_unlabelled : pool.unlabelled;
        const std::vector<UncertaintyScore> scores = vabal_scores(
            config, dataset, classifier, pool, vae_ids, round_rng, pipe, &table);
        if (config.strategy == "vabal") {
          query = select_vabal(scores, config.budget);
        } else {
          std::vector<int> predicted(pool.unlabelled.size());
          for (std::size_t i = 0; i < pool.unlabelled.size(); ++i)
            predicted[i] = classifier.predict_label(dataset.row(pool.unlabelled[i]));
          const std::size_t nl = pool.labelled.size();
          std::vector<double> xl(nl * dataset.input_dim);
          std::vector<int> yl(nl);
          for (std::size_t i = 0; i < nl; ++i) {
            std::copy_n(dataset.row(pool.labelled[i]), dataset.input_dim,
                        xl.begin() + i * dataset.input_dim);
            yl[i] = dataset.labels[pool.labelled[i]];
          }
          const std::vector<double> hl = extract_h(classifier, pipe.pre, xl.data(), nl);
          const std::vector<double> P = confusion_matrix_full(
              pipe.vae, hl, yl, config.n_mc, round_rng.substream("confusion-matrix"));
          query = select_vabal_balanced(scores, predicted, dataset.class_counts(pool.labelled),
                                        P, config.budget, config.allocator);
        }
        if (config.dump_probabilities && csv.is_open()) {
          const fs::path p = fs::path(csv_path).parent_path() /
                             ("probs_round" + std::to_string(r) + "_seed" +
                              std::to_string(seed) + ".csv");
          dump_probability_csv(p.string(), scores, table, dataset.num_classes);
        }
      }

      if (config.save_checkpoints && csv.is_open()) {
        const fs::path base = fs::path(csv_path).parent_path();
        const std::string tag = "_round" + std::to_string(r) + "_seed" + std::to_string(seed);
        save_manifest((base / ("classifier" + tag + ".json")).string(),
                      classifier.named_params());
        if (needs_vae) {
          save_manifest((base / ("vae" + tag + ".json")).string(), pipe.vae.named_params());
          save_manifest((base / ("preproc" + tag + ".json")).string(),
                        pipe.pre.named_params());
        }
      }

      RoundRecord rec;
      rec.round = r;
      rec.labelled = pool.labelled.size();
      rec.accuracy = accuracy;
      rec.class_counts = dataset.class_counts(pool.labelled);
      rec.rare_ratio = minority_fraction(rec.class_counts, dominant);
      rec.mean_sel_score = query.scores.empty() ? 0.0 : mean(query.scores);
      rec.seed = seed;
      rec.strategy = config.strategy;
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      emit(rec);

      const bool exhausted = query.ids.size() >= pool.unlabelled.size();
      result.selections.push_back(query.ids);
      pool = transfer(pool, query.ids);
      if (exhausted && r + 1 < config.rounds) {
        result.warnings.push_back("round " + std::to_string(r) +
                                  ": unlabelled pool exhausted, stopping early");
        ++r;
        break;
      }
    } catch (const Error& e) {
      if (csv.is_open()) csv << std::flush;
      throw Error("run_single: aborted in round " + std::to_string(r) + " (seed " +
                  std::to_string(seed) + "); partial results flushed: " + e.what());
    }
  }

  // last accuracy point: retrain on the final labelled pool
  {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream round_rng = root.substream("round", r);
    try {
      RngStream clf_rng = round_rng.substream("classifier");
      train_classifier(classifier, pool, dataset, config.classifier.epochs, clf_rng);
    } catch (const Error& e) {
      if (csv.is_open()) csv << std::flush;
      throw Error("run_single: aborted in final retrain (seed " + std::to_string(seed) +
                  "); partial results flushed: " + e.what());
    }
    RoundRecord rec;
    rec.round = r;
    rec.labelled = pool.labelled.size();
    rec.accuracy = evaluate_accuracy(classifier, dataset, dataset.test_ids);
    rec.class_counts = dataset.class_counts(pool.labelled);
    rec.rare_ratio = minority_fraction(rec.class_counts, dominant);
    rec.mean_sel_score = 0.0;
    rec.seed = seed;
    rec.strategy = config.strategy;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(rec);
  }
  return result;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, build_dataset(config));
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  fs::create_directories(config.output_dir);
  std::vector<RunResult> results;
  for (std::uint64_t seed : config.seeds) {
    const fs::path p = fs::path(config.output_dir) /
                       (config.strategy + "_seed" + std::to_string(seed) + ".csv");
    results.push_back(run_single(config, dataset, seed, p.string()));
  }
  return results;
}

std::vector<RunResult> sweep(const ExperimentConfig& config, const std::string& axis,
                             const std::vector<std::string>& values) {
  if (axis != "lambda" && axis != "budget" && axis != "w_variant")
    throw ContractError("sweep: axis must be lambda, budget, or w_variant");
  if (values.empty()) throw ContractError("sweep: no values");

  const Dataset dataset = build_dataset(config);
  std::vector<RunResult> all;
  for (const std::string& value : values) {
    ExperimentConfig cell = config;
    try {
      if (axis == "lambda")
        cell.lambda = std::stod(value);
      else if (axis == "budget")
        cell.budget = static_cast<std::size_t>(std::stoul(value));
      else
        cell.w_variant = value;
    } catch (const std::exception&) {
      throw ContractError("sweep: cannot parse value '" + value + "' for axis " + axis);
    }
    cell.output_dir = (fs::path(config.output_dir) / (axis + "=" + value)).string();
    cell.validate_and_finalize();
    std::vector<RunResult> cell_results = run_experiment(cell, dataset);
    all.insert(all.end(), cell_results.begin(), cell_results.end());
  }
  return all;
}

namespace {

struct ParsedRun {
  fs::path file;
  std::string strategy;
  std::string header;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> records;
};

ParsedRun parse_run_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("report: cannot open " + file.string());
  ParsedRun run;
  run.file = file;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("report: empty file " + file.string());
  run.header = line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 8)
      throw ParseError("report: " + file.string() + ": line " + std::to_string(line_no) +
                       ": too few columns");
    RoundRecord rec;
    try {
      rec.round = std::stoul(cells[0]);
      rec.labelled = std::stoul(cells[1]);
      rec.accuracy = std::stod(cells[2]);
      rec.rare_ratio = std::stod(cells[3]);
      rec.mean_sel_score = std::stod(cells[4]);
      rec.seed = std::stoull(cells[5]);
      rec.strategy = cells[6];
      for (std::size_t i = 7; i < cells.size(); ++i)
        rec.class_counts.push_back(std::stoll(cells[i]));
    } catch (const std::exception&) {
      throw ParseError("report: " + file.string() + ": line " + std::to_string(line_no) +
                       ": malformed cell");
    }
    run.records.push_back(std::move(rec));
  }
  if (run.records.empty())
    throw ParseError("report: " + file.string() + " has no records");
  run.strategy = run.records.front().strategy;
  run.seed = run.records.front().seed;
  return run;
}

}  // namespace

ReportSummary report(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ContractError("report: " + dir + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".csv") continue;
    if (name == "aggregate.csv" || name.rfind("probs_", 0) == 0) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ContractError("report: no run CSVs under " + dir);

  std::map<std::pair<std::string, std::string>, std::vector<ParsedRun>> groups;
  for (const fs::path& f : files) {
    ParsedRun run = parse_run_csv(f);
    std::string rel = fs::relative(f.parent_path(), root).string();
    if (rel.empty()) rel = ".";
    groups[{rel, run.strategy}].push_back(std::move(run));
  }

  ReportSummary summary;
  for (auto& [key, runs] : groups) {
    // compatibility: identical headers (class counts) and round sets
    std::set<std::string> headers;
    std::set<std::vector<std::size_t>> round_sets;
    for (const ParsedRun& run : runs) {
      headers.insert(run.header);
      std::vector<std::size_t> rounds;
      for (const RoundRecord& rec : run.records) rounds.push_back(rec.round);
      round_sets.insert(rounds);
    }
    if (headers.size() > 1 || round_sets.size() > 1) {
      std::string offenders;
      for (const ParsedRun& run : runs) offenders += " " + run.file.string();
      throw ContractError("report: incompatible runs in group '" + key.first + "/" +
                          key.second + "':" + offenders);
    }

    GroupSummary g;
    g.group = key.first;
    g.strategy = key.second;
    g.num_seeds = runs.size();
    const std::size_t n_rounds = runs.front().records.size();
    for (std::size_t ri = 0; ri < n_rounds; ++ri) {
      std::vector<double> acc, rare, lab, sel;
      for (const ParsedRun& run : runs) {
        acc.push_back(run.records[ri].accuracy);
        rare.push_back(run.records[ri].rare_ratio);
        lab.push_back(static_cast<double>(run.records[ri].labelled));
        sel.push_back(run.records[ri].mean_sel_score);
      }
      g.rounds.push_back(runs.front().records[ri].round);
      g.mean_accuracy.push_back(mean(acc));
      g.std_accuracy.push_back(stddev(acc));
      g.mean_rare_ratio.push_back(mean(rare));
      g.std_rare_ratio.push_back(stddev(rare));
      g.mean_labelled.push_back(mean(lab));
      g.mean_sel_score.push_back(mean(sel));
    }
    g.avg_accuracy = mean(g.mean_accuracy);
    g.final_accuracy = g.mean_accuracy.back();
    summary.groups.push_back(std::move(g));
  }

  // aggregate CSV
  {
    std::ofstream out(root / "aggregate.csv");
    if (!out) throw Error("report: cannot write aggregate.csv");
    out << "group,strategy,round,n_seeds,mean_labelled,mean_accuracy,std_accuracy,"
           "mean_rare_ratio,std_rare_ratio,mean_sel_score\n";
    for (const GroupSummary& g : summary.groups)
      for (std::size_t ri = 0; ri < g.rounds.size(); ++ri)
        out << g.group << "," << g.strategy << "," << g.rounds[ri] << "," << g.num_seeds << ","
            << fmt(g.mean_labelled[ri]) << "," << fmt(g.mean_accuracy[ri]) << ","
            << fmt(g.std_accuracy[ri]) << "," << fmt(g.mean_rare_ratio[ri]) << ","
            << fmt(g.std_rare_ratio[ri]) << "," << fmt(g.mean_sel_score[ri]) << "\n";
  }
  // JSON summary with Table-style avg/final columns
  {
    nlohmann::json j = nlohmann::json::array();
    for (const GroupSummary& g : summary.groups) {
      nlohmann::json e;
      e["group"] = g.group;
      e["strategy"] = g.strategy;
      e["n_seeds"] = g.num_seeds;
      e["avg_accuracy"] = g.avg_accuracy;
      e["final_accuracy"] = g.final_accuracy;
      e["rounds"] = g.rounds;
      e["mean_accuracy"] = g.mean_accuracy;
      e["std_accuracy"] = g.std_accuracy;
      e["mean_rare_ratio"] = g.mean_rare_ratio;
      j.push_back(std::move(e));
    }
    std::ofstream out(root / "summary.json");
    if (!out) throw Error("report: cannot write summary.json");
    out << j.dump(2);
  }
  return summary;
}

}  // namespace vabal
