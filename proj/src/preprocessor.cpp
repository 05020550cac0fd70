#include "vabal/preprocessor.hpp"

#include <cmath>

#include "vabal/error.hpp"
#include "vabal/kernels.hpp"

namespace vabal {

FeaturePreprocessor::FeaturePreprocessor(std::vector<std::size_t> tap_dims,
                                         PreprocessorConfig config)
    : tap_dims_(std::move(tap_dims)), config_(config) {
  if (tap_dims_.empty()) throw ContractError("FeaturePreprocessor: no taps");
  for (std::size_t d : tap_dims_) {
    proj_.push_back({Tensor::zeros({d, config_.proj_dim}, true),
                     Tensor::zeros({config_.proj_dim}, true)});
    run_mean_.emplace_back(d, 0.0);
    run_var_.emplace_back(d, 1.0);
  }
}

void FeaturePreprocessor::init_params(RngStream& rng) {
  RngStream stream = rng.substream("preproc-init");
  for (std::size_t t = 0; t < proj_.size(); ++t) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(tap_dims_[t]));
    for (double& w : proj_[t].weight.data) w = scale * stream.normal();
    std::fill(proj_[t].bias.data.begin(), proj_[t].bias.data.end(), 0.0);
    std::fill(run_mean_[t].begin(), run_mean_[t].end(), 0.0);
    std::fill(run_var_[t].begin(), run_var_[t].end(), 1.0);
  }
  updates_ = 0;
}

std::vector<std::vector<double>> FeaturePreprocessor::normalize_train(
    const std::vector<std::vector<double>>& taps, std::size_t batch) {
  if (taps.size() != tap_dims_.size())
    throw ContractError("FeaturePreprocessor: tap count mismatch");
  std::vector<std::vector<double>> out(taps.size());
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const std::size_t d = tap_dims_[t];
    const std::vector<double>& src = taps[t];
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += src[i * d + j];
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = src[i * d + j] - mean[j];
        var[j] += c * c;
      }
    for (std::size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(batch);
    for (std::size_t j = 0; j < d; ++j) {
      run_mean_[t][j] = config_.momentum * run_mean_[t][j] + (1.0 - config_.momentum) * mean[j];
      run_var_[t][j] = config_.momentum * run_var_[t][j] + (1.0 - config_.momentum) * var[j];
    }
    out[t].resize(batch * d);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out[t][i * d + j] = (src[i * d + j] - mean[j]) / std::sqrt(var[j] + config_.eps);
  }
  ++updates_;
  return out;
}

std::vector<std::vector<double>> FeaturePreprocessor::normalize_eval(
    const std::vector<std::vector<double>>& taps, std::size_t batch) const {
  if (!warmed_up())
    throw ContractError("FeaturePreprocessor: statistics not warmed up");
  if (taps.size() != tap_dims_.size())
    throw ContractError("FeaturePreprocessor: tap count mismatch");
  std::vector<std::vector<double>> out(taps.size());
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const std::size_t d = tap_dims_[t];
    out[t].resize(batch * d);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out[t][i * d + j] =
            (taps[t][i * d + j] - run_mean_[t][j]) / std::sqrt(run_var_[t][j] + config_.eps);
  }
  return out;
}

Tape::Id FeaturePreprocessor::project_tape(Tape& tape,
                                           const std::vector<Tape::Id>& normalized_taps) {
  if (normalized_taps.size() != proj_.size())
    throw ContractError("FeaturePreprocessor: tap count mismatch");
  Tape::Id h = -1;
  for (std::size_t t = 0; t < proj_.size(); ++t) {
    Tape::Id p = tape.matmul(normalized_taps[t], tape.leaf(proj_[t].weight));
    p = tape.add_row(p, tape.leaf(proj_[t].bias));
    p = tape.sigmoid(p);
    h = (t == 0) ? p : tape.concat_cols(h, p);
  }
  return h;
}

void FeaturePreprocessor::project_eval(const std::vector<std::vector<double>>& normalized_taps,
                                       std::size_t batch, double* h_out) const {
  const std::size_t pd = config_.proj_dim;
  const std::size_t total = output_dim();
  std::vector<double> buf;
  for (std::size_t t = 0; t < proj_.size(); ++t) {
    buf.assign(batch * pd, 0.0);
    kern::matmul(normalized_taps[t].data(), proj_[t].weight.data.data(), buf.data(), batch,
                 tap_dims_[t], pd);
    kern::add_row_vector(buf.data(), proj_[t].bias.data.data(), buf.data(), batch, pd);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < pd; ++j)
        h_out[i * total + t * pd + j] = 1.0 / (1.0 + std::exp(-buf[i * pd + j]));
  }
}

std::vector<Tensor*> FeaturePreprocessor::params() {
  std::vector<Tensor*> out;
  for (DenseLayer& l : proj_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> FeaturePreprocessor::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t t = 0; t < proj_.size(); ++t) {
    out.emplace_back("proj" + std::to_string(t) + ".weight", &proj_[t].weight);
    out.emplace_back("proj" + std::to_string(t) + ".bias", &proj_[t].bias);
  }
  return out;
}

std::vector<double> extract_h(const MlpClassifier& model, const FeaturePreprocessor& pre,
                              const double* x, std::size_t batch) {
  if (!pre.warmed_up())
    throw ContractError("extract_h: preprocessor statistics not warmed up");
  std::vector<std::vector<double>> taps;
  std::vector<double> logits(batch * model.num_classes());
  model.forward(x, batch, logits.data(), &taps);
  const auto normalized = pre.normalize_eval(taps, batch);
  std::vector<double> h(batch * pre.output_dim());
  pre.project_eval(normalized, batch, h.data());
  return h;
}

}  // namespace vabal
