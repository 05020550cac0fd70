#include "vabal/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vabal/error.hpp"
#include "vabal/kernels.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out) {
  DenseLayer l;
  l.weight = Tensor::zeros({in, out}, true);
  l.bias = Tensor::zeros({out}, true);
  return l;
}

void he_init(DenseLayer& l, RngStream& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(l.weight.shape[0]));
  for (double& w : l.weight.data) w = scale * rng.normal();
  std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
}

// inverted dropout mask: 0 or 1/(1-p)
std::vector<double> dropout_mask(std::size_t n, double p, RngStream& rng) {
  std::vector<double> mask(n);
  const double keep = 1.0 - p;
  for (double& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

}  // namespace

MlpClassifier::MlpClassifier(std::size_t input_dim, std::size_t num_classes, MlpConfig config)
    : input_dim_(input_dim), num_classes_(num_classes), config_(std::move(config)) {
  if (input_dim_ == 0 || num_classes_ == 0)
    throw ContractError("MlpClassifier: input_dim and num_classes must be positive");
  if (config_.hidden.empty()) throw ContractError("MlpClassifier: needs at least one hidden layer");
  if (config_.dropout < 0.0 || config_.dropout >= 1.0)
    throw ContractError("MlpClassifier: dropout must be in [0,1)");
  std::size_t in = input_dim_;
  for (std::size_t w : config_.hidden) {
    layers_.push_back(make_layer(in, w));
    in = w;
  }
  layers_.push_back(make_layer(in, num_classes_));
}

void MlpClassifier::init_params(RngStream& rng) {
  RngStream stream = rng.substream("mlp-init");
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) he_init(layers_[i], stream);
  // zero head: an untrained model predicts the uniform distribution
  DenseLayer& head = layers_.back();
  std::fill(head.weight.data.begin(), head.weight.data.end(), 0.0);
  std::fill(head.bias.data.begin(), head.bias.data.end(), 0.0);
}

void MlpClassifier::forward(const double* x, std::size_t batch, double* logits,
                            std::vector<std::vector<double>>* taps,
                            RngStream* dropout_rng) const {
  if (taps) taps->assign(num_taps(), {});
  std::vector<double> cur(x, x + batch * input_dim_);
  std::size_t cur_dim = input_dim_;
  for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
    const DenseLayer& l = layers_[li];
    const std::size_t out_dim = l.weight.shape[1];
    std::vector<double> next(batch * out_dim);
    if (dropout_rng && config_.dropout > 0.0) {
      std::vector<double> mask = dropout_mask(cur.size(), config_.dropout, *dropout_rng);
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] *= mask[i];
    }
    kern::matmul(cur.data(), l.weight.data.data(), next.data(), batch, cur_dim, out_dim);
    kern::add_row_vector(next.data(), l.bias.data.data(), next.data(), batch, out_dim);
    for (double& v : next) v = v > 0.0 ? v : 0.0;
    if (taps) (*taps)[li] = next;
    cur = std::move(next);
    cur_dim = out_dim;
  }
  const DenseLayer& head = layers_.back();
  kern::matmul(cur.data(), head.weight.data.data(), logits, batch, cur_dim, num_classes_);
  kern::add_row_vector(logits, head.bias.data.data(), logits, batch, num_classes_);
}

std::vector<double> MlpClassifier::predict_proba(const double* x) const {
  std::vector<double> logits(num_classes_);
  forward(x, 1, logits.data());
  softmax_row(logits.data(), num_classes_);
  return logits;
}

int MlpClassifier::predict_label(const double* x) const {
  std::vector<double> p = predict_proba(x);
  return static_cast<int>(argmax(p));
}

Tape::Id MlpClassifier::forward_tape(Tape& tape, Tape::Id x, RngStream* dropout_rng) {
  Tape::Id cur = x;
  for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
    DenseLayer& l = layers_[li];
    if (dropout_rng && config_.dropout > 0.0) {
      const Tensor& v = tape.value(cur);
      Tensor mask(v.shape, dropout_mask(v.size(), config_.dropout, *dropout_rng));
      cur = tape.mul(cur, tape.constant(std::move(mask)));
    }
    cur = tape.matmul(cur, tape.leaf(l.weight));
    cur = tape.add_row(cur, tape.leaf(l.bias));
    cur = tape.relu(cur);
  }
  DenseLayer& head = layers_.back();
  cur = tape.matmul(cur, tape.leaf(head.weight));
  return tape.add_row(cur, tape.leaf(head.bias));
}

std::vector<Tensor*> MlpClassifier::params() {
  std::vector<Tensor*> out;
  for (DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> MlpClassifier::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out.emplace_back("layer" + std::to_string(i) + ".weight", &layers_[i].weight);
    out.emplace_back("layer" + std::to_string(i) + ".bias", &layers_[i].bias);
  }
  return out;
}

std::vector<double> train_classifier(MlpClassifier& model, const Pool& pool,
                                     const Dataset& dataset, std::size_t epochs,
                                     RngStream& rng) {
  if (pool.labelled.empty())
    throw ContractError("train_classifier: labelled pool is empty");
  {
    std::set<int> classes;
    for (std::size_t id : pool.labelled) classes.insert(dataset.labels[id]);
    if (classes.size() < 2)
      throw ContractError("train_classifier: degenerate labelled pool with " +
                          std::to_string(classes.size()) + " distinct class(es)");
  }

  model.init_params(rng);
  Adam adam(model.params(), {.lr = model.config().lr});
  RngStream dropout = rng.substream("dropout");

  const std::size_t dim = model.input_dim();
  const std::size_t nc = model.num_classes();
  const std::size_t bs = model.config().batch_size;
  std::vector<std::size_t> order = pool.labelled;
  std::vector<double> curve;
  curve.reserve(epochs);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    RngStream shuffle = rng.substream("shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.uniform_below(i)]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      std::vector<double> xb(n * dim);
      std::vector<double> onehot(n * nc, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t id = order[start + i];
        std::copy_n(dataset.row(id), dim, xb.begin() + i * dim);
        onehot[i * nc + static_cast<std::size_t>(dataset.labels[id])] = 1.0;
      }
      Tape tape;
      Tape::Id x = tape.constant({n, dim}, std::move(xb));
      Tape::Id logits = model.forward_tape(tape, x, model.has_dropout() ? &dropout : nullptr);
      Tape::Id logp = tape.log_softmax(logits);
      Tape::Id picked = tape.mul(logp, tape.constant({n, nc}, std::move(onehot)));
      Tape::Id loss = tape.affine(tape.sum(picked), -1.0 / static_cast<double>(n), 0.0);
      adam.zero_grad();
      tape.backward(loss);
      adam.step();
      loss_sum += tape.value(loss).data[0] * static_cast<double>(n);
    }
    curve.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return curve;
}

double evaluate_accuracy(const MlpClassifier& model, const Dataset& dataset,
                         const std::vector<std::size_t>& ids) {
  if (ids.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t id : ids)
    if (model.predict_label(dataset.row(id)) == dataset.labels[id]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ids.size());
}

}  // namespace vabal
