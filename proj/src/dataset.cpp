#include "vabal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vabal/error.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

void MixtureSpec::validate() const {
  if (num_classes == 0) throw ContractError("MixtureSpec: num_classes must be positive");
  if (input_dim < 2) throw ContractError("MixtureSpec: input_dim must be at least 2");
  if (counts.size() != num_classes || means.size() != num_classes)
    throw ContractError("MixtureSpec: counts/means must have one entry per class");
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw ContractError("MixtureSpec: class " + std::to_string(c) + " has zero count");
    if (means[c].size() != input_dim)
      throw ContractError("MixtureSpec: mean of class " + std::to_string(c) + " has wrong dimension");
  }
  if (stddev <= 0.0) throw ContractError("MixtureSpec: stddev must be positive");
  for (std::size_t a = 0; a < num_classes; ++a)
    for (std::size_t b = a + 1; b < num_classes; ++b)
      if (means[a] == means[b])
        throw ContractError("MixtureSpec: means of classes " + std::to_string(a) + " and " +
                            std::to_string(b) + " coincide");
}

std::vector<std::int64_t> Dataset::class_counts(const std::vector<std::size_t>& ids) const {
  std::vector<std::int64_t> counts(num_classes, 0);
  for (std::size_t id : ids) ++counts[static_cast<std::size_t>(labels[id])];
  return counts;
}

void Dataset::stratified_split(double test_fraction, RngStream& rng) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ContractError("stratified_split: fraction must be in (0,1)");
  std::vector<std::vector<std::size_t>> per_class(num_classes);
  for (std::size_t id : train_ids) per_class[static_cast<std::size_t>(labels[id])].push_back(id);
  std::vector<std::size_t> new_train, new_test;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& ids = per_class[c];
    if (ids.empty()) continue;
    RngStream cls = rng.substream("split", c);
    for (std::size_t i = ids.size(); i > 1; --i)
      std::swap(ids[i - 1], ids[cls.uniform_below(i)]);
    const std::size_t n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(ids.size()))));
    for (std::size_t i = 0; i < ids.size(); ++i)
      (i < n_test ? new_test : new_train).push_back(ids[i]);
  }
  std::sort(new_train.begin(), new_train.end());
  std::sort(new_test.begin(), new_test.end());
  train_ids = std::move(new_train);
  test_ids = std::move(new_test);
}

Dataset generate_mixture(const MixtureSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.input_dim = spec.input_dim;
  ds.num_classes = spec.num_classes;

  RngStream root(spec.seed, "mixture");
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    RngStream cls = root.substream("class", c);
    for (std::size_t i = 0; i < spec.counts[c]; ++i) {
      for (std::size_t d = 0; d < spec.input_dim; ++d)
        ds.features.push_back(spec.means[c][d] + spec.stddev * cls.normal());
      ds.labels.push_back(static_cast<int>(c));
      ds.train_ids.push_back(ds.labels.size() - 1);
    }
  }
  ds.stratified_split(0.2, root);
  return ds;
}

namespace {

Dataset subsample_classes(const Dataset& dataset, const std::vector<int>& classes,
                          double removal_fraction, RngStream& rng, const char* op) {
  if (removal_fraction < 0.0 || removal_fraction >= 1.0)
    throw ContractError(std::string(op) + ": removal_fraction must be in [0,1)");
  std::set<int> target(classes.begin(), classes.end());
  for (int c : target)
    if (c < 0 || static_cast<std::size_t>(c) >= dataset.num_classes)
      throw ContractError(std::string(op) + ": class " + std::to_string(c) + " out of range");

  Dataset out = dataset;
  std::vector<std::vector<std::size_t>> per_class(dataset.num_classes);
  for (std::size_t id : dataset.train_ids)
    per_class[static_cast<std::size_t>(dataset.labels[id])].push_back(id);

  std::vector<std::size_t> new_train;
  for (std::size_t c = 0; c < dataset.num_classes; ++c) {
    auto& ids = per_class[c];
    if (!target.count(static_cast<int>(c)) || ids.empty()) {
      new_train.insert(new_train.end(), ids.begin(), ids.end());
      continue;
    }
    const auto survivors = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor((1.0 - removal_fraction) *
                                               static_cast<double>(ids.size()))));
    RngStream cls = rng.substream("subsample", c);
    std::vector<std::size_t> shuffled = ids;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[cls.uniform_below(i)]);
    shuffled.resize(survivors);
    std::sort(shuffled.begin(), shuffled.end());
    new_train.insert(new_train.end(), shuffled.begin(), shuffled.end());
  }
  std::sort(new_train.begin(), new_train.end());
  out.train_ids = std::move(new_train);
  return out;
}

}  // namespace

Dataset make_dominant(const Dataset& dataset, const std::vector<int>& keep_classes,
                      double removal_fraction, RngStream& rng) {
  if (keep_classes.empty())
    throw ContractError("make_dominant: keep_classes must be nonempty");
  std::set<int> keep(keep_classes.begin(), keep_classes.end());
  for (int c : keep)
    if (c < 0 || static_cast<std::size_t>(c) >= dataset.num_classes)
      throw ContractError("make_dominant: class " + std::to_string(c) + " out of range");
  std::vector<int> others;
  for (std::size_t c = 0; c < dataset.num_classes; ++c)
    if (!keep.count(static_cast<int>(c))) others.push_back(static_cast<int>(c));
  return subsample_classes(dataset, others, removal_fraction, rng, "make_dominant");
}

Dataset make_rare(const Dataset& dataset, const std::vector<int>& rare_classes,
                  double removal_fraction, RngStream& rng) {
  return subsample_classes(dataset, rare_classes, removal_fraction, rng, "make_rare");
}

Dataset load_csv(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path);
  // header: label,f0,f1,...
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "label")
    throw ParseError("load_csv: line 1: header must start with 'label'");
  const std::size_t dim = header.size() - 1;
  if (dim == 0) throw ParseError("load_csv: line 1: no feature columns");

  Dataset ds;
  ds.input_dim = dim;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != dim + 1)
      throw ParseError("load_csv: line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 1) + " cells, got " + std::to_string(cells.size()));
    try {
      std::size_t used = 0;
      const long lbl = std::stol(cells[0], &used);
      if (used != cells[0].size() || lbl < 0) throw std::invalid_argument("label");
      ds.labels.push_back(static_cast<int>(lbl));
      max_label = std::max(max_label, static_cast<int>(lbl));
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = std::stod(cells[j + 1], &used);
        if (used != cells[j + 1].size()) throw std::invalid_argument("feature");
        ds.features.push_back(v);
      }
    } catch (const std::exception&) {
      throw ParseError("load_csv: line " + std::to_string(line_no) + ": non-numeric cell");
    }
  }
  if (ds.labels.empty()) throw ParseError("load_csv: no data rows in " + path);
  if (!all_finite(ds.features))
    throw ParseError("load_csv: non-finite feature value in " + path);

  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  ds.train_ids.resize(ds.labels.size());
  for (std::size_t i = 0; i < ds.train_ids.size(); ++i) ds.train_ids[i] = i;

  std::vector<std::int64_t> counts = ds.train_class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0 && warnings)
      warnings->push_back("load_csv: class " + std::to_string(c) + " has no samples");
  return ds;
}

void save_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_csv: cannot open " + path + " for writing");
  out << "label";
  for (std::size_t j = 0; j < dataset.input_dim; ++j) out << ",f" << j;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.num_samples(); ++i) {
    out << dataset.labels[i];
    const double* r = dataset.row(i);
    for (std::size_t j = 0; j < dataset.input_dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r[j]);
      out << ',' << buf;
    }
    out << "\n";
  }
}

std::string mixture_to_json(const MixtureSpec& spec) {
  nlohmann::json j;
  j["num_classes"] = spec.num_classes;
  j["input_dim"] = spec.input_dim;
  j["counts"] = spec.counts;
  j["means"] = spec.means;
  j["stddev"] = spec.stddev;
  j["seed"] = spec.seed;
  return j.dump(2);
}

MixtureSpec mixture_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("mixture spec: ") + e.what());
  }
  static const std::set<std::string> allowed = {"num_classes", "input_dim", "counts",
                                                "means",       "stddev",    "seed"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError("mixture spec: unknown key '" + it.key() + "'");
  MixtureSpec spec;
  try {
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.counts = j.at("counts").get<std::vector<std::size_t>>();
    spec.means = j.at("means").get<std::vector<std::vector<double>>>();
    if (j.contains("stddev")) spec.stddev = j.at("stddev").get<double>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mixture spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

MixtureSpec load_mixture_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_mixture_spec: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return mixture_from_json(ss.str());
}

}  // namespace vabal
