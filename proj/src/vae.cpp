#include "vabal/vae.hpp"

#include <algorithm>
#include <cmath>

#include "vabal/error.hpp"
#include "vabal/kernels.hpp"
#include "vabal/numeric.hpp"

namespace vabal {

EnergyVariant energy_variant_from_string(const std::string& name) {
  if (name == "square") return EnergyVariant::Square;
  if (name == "absolute") return EnergyVariant::Absolute;
  if (name == "sigmoid") return EnergyVariant::Sigmoid;
  throw ContractError("unknown energy variant '" + name + "' (square|absolute|sigmoid)");
}

std::string to_string(EnergyVariant v) {
  switch (v) {
    case EnergyVariant::Square: return "square";
    case EnergyVariant::Absolute: return "absolute";
    case EnergyVariant::Sigmoid: return "sigmoid";
  }
  return "?";
}

RegularizedVae::RegularizedVae(std::size_t input_dim, std::size_t num_classes, VaeConfig config)
    : input_dim_(input_dim), config_(config) {
  if (input_dim_ == 0 || num_classes == 0)
    throw ContractError("RegularizedVae: input_dim and num_classes must be positive");
  if (config_.lambda < 0.0) throw ContractError("RegularizedVae: lambda must be >= 0");
  if (config_.dims_per_class == 0)
    throw ContractError("RegularizedVae: dims_per_class must be positive");
  partition_ = {num_classes, config_.dims_per_class};
  const std::size_t hid = config_.hidden;
  const std::size_t lat = partition_.latent_dim();
  enc1_ = {Tensor::zeros({input_dim_, hid}, true), Tensor::zeros({hid}, true)};
  enc2_ = {Tensor::zeros({hid, hid}, true), Tensor::zeros({hid}, true)};
  enc_mu_ = {Tensor::zeros({hid, lat}, true), Tensor::zeros({lat}, true)};
  enc_logvar_ = {Tensor::zeros({hid, lat}, true), Tensor::zeros({lat}, true)};
  dec1_ = {Tensor::zeros({lat, hid}, true), Tensor::zeros({hid}, true)};
  dec2_ = {Tensor::zeros({hid, hid}, true), Tensor::zeros({hid}, true)};
  dec_out_ = {Tensor::zeros({hid, input_dim_}, true), Tensor::zeros({input_dim_}, true)};
}

void RegularizedVae::init_params(RngStream& rng) {
  RngStream stream = rng.substream("vae-init");
  auto he = [&stream](DenseLayer& l) {
    const double scale = std::sqrt(2.0 / static_cast<double>(l.weight.shape[0]));
    for (double& w : l.weight.data) w = scale * stream.normal();
    std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
  };
  auto xavier = [&stream](DenseLayer& l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.weight.shape[0]));
    for (double& w : l.weight.data) w = scale * stream.normal();
    std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
  };
  auto zero = [](DenseLayer& l) {
    std::fill(l.weight.data.begin(), l.weight.data.end(), 0.0);
    std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
  };
  he(enc1_);
  he(enc2_);
  // zero heads: training starts exactly at the unit Gaussian posterior
  zero(enc_mu_);
  zero(enc_logvar_);
  he(dec1_);
  he(dec2_);
  xavier(dec_out_);
}

namespace {
void dense_relu(const double* x, std::size_t batch, const DenseLayer& l, double* out) {
  const std::size_t in = l.weight.shape[0];
  const std::size_t on = l.weight.shape[1];
  kern::matmul(x, l.weight.data.data(), out, batch, in, on);
  kern::add_row_vector(out, l.bias.data.data(), out, batch, on);
  for (std::size_t i = 0; i < batch * on; ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
}
}  // namespace

void RegularizedVae::encode(const double* h, std::size_t batch, double* mu,
                            double* log_var) const {
  const std::size_t hid = config_.hidden;
  const std::size_t lat = latent_dim();
  std::vector<double> a1(batch * hid), a2(batch * hid);
  dense_relu(h, batch, enc1_, a1.data());
  dense_relu(a1.data(), batch, enc2_, a2.data());
  kern::matmul(a2.data(), enc_mu_.weight.data.data(), mu, batch, hid, lat);
  kern::add_row_vector(mu, enc_mu_.bias.data.data(), mu, batch, lat);
  kern::matmul(a2.data(), enc_logvar_.weight.data.data(), log_var, batch, hid, lat);
  kern::add_row_vector(log_var, enc_logvar_.bias.data.data(), log_var, batch, lat);
  for (std::size_t i = 0; i < batch * lat; ++i)
    log_var[i] = std::min(std::max(log_var[i], kLogVarMin), kLogVarMax);
}

void RegularizedVae::decode(const double* z, std::size_t batch, double* h_hat) const {
  const std::size_t hid = config_.hidden;
  std::vector<double> a1(batch * hid), a2(batch * hid);
  dense_relu(z, batch, dec1_, a1.data());
  dense_relu(a1.data(), batch, dec2_, a2.data());
  kern::matmul(a2.data(), dec_out_.weight.data.data(), h_hat, batch, hid, input_dim_);
  kern::add_row_vector(h_hat, dec_out_.bias.data.data(), h_hat, batch, input_dim_);
  for (std::size_t i = 0; i < batch * input_dim_; ++i)
    h_hat[i] = 1.0 / (1.0 + std::exp(-h_hat[i]));
}

std::pair<Tape::Id, Tape::Id> RegularizedVae::encode_tape(Tape& tape, Tape::Id h) {
  Tape::Id a = tape.relu(tape.add_row(tape.matmul(h, tape.leaf(enc1_.weight)),
                                      tape.leaf(enc1_.bias)));
  a = tape.relu(tape.add_row(tape.matmul(a, tape.leaf(enc2_.weight)), tape.leaf(enc2_.bias)));
  Tape::Id mu = tape.add_row(tape.matmul(a, tape.leaf(enc_mu_.weight)), tape.leaf(enc_mu_.bias));
  Tape::Id lv = tape.add_row(tape.matmul(a, tape.leaf(enc_logvar_.weight)),
                             tape.leaf(enc_logvar_.bias));
  lv = tape.clamp(lv, kLogVarMin, kLogVarMax);
  return {mu, lv};
}

Tape::Id RegularizedVae::decode_tape(Tape& tape, Tape::Id z) {
  Tape::Id a = tape.relu(tape.add_row(tape.matmul(z, tape.leaf(dec1_.weight)),
                                      tape.leaf(dec1_.bias)));
  a = tape.relu(tape.add_row(tape.matmul(a, tape.leaf(dec2_.weight)), tape.leaf(dec2_.bias)));
  return tape.sigmoid(
      tape.add_row(tape.matmul(a, tape.leaf(dec_out_.weight)), tape.leaf(dec_out_.bias)));
}

std::vector<Tensor*> RegularizedVae::params() {
  std::vector<Tensor*> out;
  for (DenseLayer* l : {&enc1_, &enc2_, &enc_mu_, &enc_logvar_, &dec1_, &dec2_, &dec_out_}) {
    out.push_back(&l->weight);
    out.push_back(&l->bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> RegularizedVae::named_params() {
  static const char* names[] = {"enc1", "enc2", "enc_mu", "enc_logvar", "dec1", "dec2", "dec_out"};
  std::vector<std::pair<std::string, Tensor*>> out;
  std::size_t i = 0;
  for (DenseLayer* l : {&enc1_, &enc2_, &enc_mu_, &enc_logvar_, &dec1_, &dec2_, &dec_out_}) {
    out.emplace_back(std::string(names[i]) + ".weight", &l->weight);
    out.emplace_back(std::string(names[i]) + ".bias", &l->bias);
    ++i;
  }
  return out;
}

std::vector<double> class_energies(std::span<const double> z, const LatentPartition& partition,
                                   EnergyVariant variant) {
  if (z.size() != partition.latent_dim())
    throw ShapeError("class_energies: z has length " + std::to_string(z.size()) +
                     ", partition expects " + std::to_string(partition.latent_dim()));
  std::vector<double> w(partition.num_classes, 0.0);
  for (std::size_t n = 0; n < partition.num_classes; ++n) {
    double acc = 0.0;
    for (std::size_t j = partition.block_begin(n); j < partition.block_end(n); ++j) {
      switch (variant) {
        case EnergyVariant::Square: acc += z[j] * z[j]; break;
        case EnergyVariant::Absolute: acc += std::fabs(z[j]); break;
        case EnergyVariant::Sigmoid: acc += 1.0 / (1.0 + std::exp(-z[j])); break;
      }
    }
    w[n] = acc;
  }
  return w;
}

std::size_t argmin_energy(std::span<const double> energies) { return argmin(energies); }

int predict_latent_label(const RegularizedVae& vae, const double* h, RngStream& rng) {
  const std::size_t lat = vae.latent_dim();
  std::vector<double> mu(lat), lv(lat), z(lat);
  vae.encode(h, 1, mu.data(), lv.data());
  for (std::size_t j = 0; j < lat; ++j)
    z[j] = mu[j] + std::exp(0.5 * lv[j]) * rng.normal();
  const std::vector<double> w = class_energies(z, vae.partition(), vae.config().variant);
  return static_cast<int>(argmin_energy(w));
}

Tape::Id reparameterize(Tape& tape, Tape::Id mu, Tape::Id log_var, Tensor eps) {
  if (!tape.value(mu).same_shape(tape.value(log_var)) ||
      !tape.value(mu).same_shape(eps))
    throw ShapeError("reparameterize: mu/log_var/eps shapes differ");
  Tape::Id std_dev = tape.exp(tape.affine(log_var, 0.5, 0.0));
  return tape.add(mu, tape.mul(std_dev, tape.constant(std::move(eps))));
}

Tape::Id kl_diag_gaussian(Tape& tape, Tape::Id mu, Tape::Id log_var) {
  if (!tape.value(mu).same_shape(tape.value(log_var)))
    throw ShapeError("kl_diag_gaussian: mu and log_var shapes differ");
  // -(1/2) * sum(1 + lv - mu^2 - exp(lv))
  Tape::Id inner = tape.affine(log_var, 1.0, 1.0);
  inner = tape.sub(inner, tape.square(mu));
  inner = tape.sub(inner, tape.exp(log_var));
  return tape.affine(tape.sum(inner), -0.5, 0.0);
}

Tape::Id class_energies_tape(Tape& tape, Tape::Id z, const LatentPartition& partition,
                             EnergyVariant variant) {
  if (tape.value(z).cols() != partition.latent_dim())
    throw ShapeError("class_energies_tape: latent width mismatch");
  Tape::Id v = -1;
  switch (variant) {
    case EnergyVariant::Square: v = tape.square(z); break;
    case EnergyVariant::Absolute: v = tape.abs(z); break;
    case EnergyVariant::Sigmoid: v = tape.sigmoid(z); break;
  }
  return tape.block_sum(v, partition.dims_per_class);
}

Tape::Id class_loss_tape(Tape& tape, Tape::Id z, const LatentPartition& partition,
                         Tape::Id target_onehot, EnergyVariant variant) {
  const Tensor& t = tape.value(target_onehot);
  if (t.cols() != partition.num_classes)
    throw ShapeError("class_loss_tape: target has wrong class count");
  const std::size_t rows = t.size() / t.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const double v = t.data[r * t.cols() + c];
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw ContractError("class_loss_tape: target row is not one-hot");
    }
    if (ones != 1) throw ContractError("class_loss_tape: target row is not one-hot");
  }
  Tape::Id w = class_energies_tape(tape, z, partition, variant);
  Tape::Id logp = tape.log_softmax(tape.affine(w, -1.0, 0.0));
  Tape::Id picked = tape.mul(logp, target_onehot);
  return tape.affine(tape.sum(picked), -1.0 / static_cast<double>(rows), 0.0);
}

VaeLossIds vae_loss_tape(Tape& tape, RegularizedVae& vae, Tape::Id h_input,
                         Tape::Id recon_target, Tensor eps) {
  const std::size_t batch = tape.value(h_input).rows();
  VaeLossIds ids;
  auto [mu, lv] = vae.encode_tape(tape, h_input);
  ids.mu = mu;
  ids.log_var = lv;
  ids.z = reparameterize(tape, mu, lv, std::move(eps));
  Tape::Id h_hat = vae.decode_tape(tape, ids.z);
  Tape::Id diff = tape.sub(recon_target, h_hat);
  ids.recon = tape.affine(tape.sum(tape.square(diff)), 0.5 / static_cast<double>(batch), 0.0);
  ids.kl = tape.affine(kl_diag_gaussian(tape, mu, lv), 1.0 / static_cast<double>(batch), 0.0);
  ids.total = tape.add(ids.recon, ids.kl);
  return ids;
}

double loss_vae(RegularizedVae& vae, const std::vector<double>& h, std::size_t batch,
                RngStream& rng) {
  Tape tape;
  Tape::Id h_id = tape.constant({batch, vae.input_dim()}, std::vector<double>(h));
  Tensor eps = Tensor::zeros({batch, vae.latent_dim()});
  for (double& e : eps.data) e = rng.normal();
  VaeLossIds ids = vae_loss_tape(tape, vae, h_id, h_id, std::move(eps));
  return tape.value(ids.total).data[0];
}

double loss_class(RegularizedVae& vae, const std::vector<double>& z, std::size_t batch,
                  const std::vector<int>& targets) {
  Tape tape;
  const std::size_t nc = vae.num_classes();
  Tape::Id z_id = tape.constant({batch, vae.latent_dim()}, std::vector<double>(z));
  std::vector<double> onehot(batch * nc, 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= nc)
      throw ContractError("loss_class: target out of range");
    onehot[i * nc + static_cast<std::size_t>(targets[i])] = 1.0;
  }
  Tape::Id t = tape.constant({batch, nc}, std::move(onehot));
  Tape::Id loss = class_loss_tape(tape, z_id, vae.partition(), t, vae.config().variant);
  return tape.value(loss).data[0];
}

VaeTrainResult train_vae(RegularizedVae& vae, FeaturePreprocessor& pre,
                         const MlpClassifier& classifier, const Dataset& dataset,
                         const std::vector<std::size_t>& unlabelled_ids, std::size_t epochs,
                         RngStream& rng) {
  if (unlabelled_ids.empty()) throw ContractError("train_vae: unlabelled pool is empty");
  if (pre.output_dim() != vae.input_dim())
    throw ShapeError("train_vae: preprocessor output dim " + std::to_string(pre.output_dim()) +
                     " != VAE input dim " + std::to_string(vae.input_dim()));

  vae.init_params(rng);
  pre.init_params(rng);

  std::vector<Tensor*> params = vae.params();
  for (Tensor* p : pre.params()) params.push_back(p);
  Adam adam(params, {.lr = vae.config().lr});

  const std::size_t dim = classifier.input_dim();
  const std::size_t nc = vae.num_classes();
  const std::size_t bs = vae.config().batch_size;
  const double lambda = vae.config().lambda;

  std::vector<std::size_t> order = unlabelled_ids;
  VaeTrainResult result;
  RngStream eps_stream = rng.substream("vae-eps");

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    RngStream shuffle = rng.substream("vae-shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.uniform_below(i)]);

    double vae_sum = 0.0, class_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      std::vector<double> xb(n * dim);
      for (std::size_t i = 0; i < n; ++i)
        std::copy_n(dataset.row(order[start + i]), dim, xb.begin() + i * dim);

      // frozen classifier supplies taps and pseudo-labels
      std::vector<std::vector<double>> taps;
      std::vector<double> logits(n * nc);
      classifier.forward(xb.data(), n, logits.data(), &taps);
      std::vector<double> onehot(n * nc, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pred = argmax({logits.data() + i * nc, nc});
        onehot[i * nc + pred] = 1.0;
      }

      const auto normalized = pre.normalize_train(taps, n);

      Tape tape;
      std::vector<Tape::Id> tap_ids;
      for (std::size_t t = 0; t < normalized.size(); ++t)
        tap_ids.push_back(tape.constant({n, taps[t].size() / n}, std::vector<double>(normalized[t])));
      Tape::Id h = pre.project_tape(tape, tap_ids);
      // the reconstruction target is the current h value, detached
      Tape::Id target = tape.constant(tape.value(h));

      Tensor eps = Tensor::zeros({n, vae.latent_dim()});
      for (double& e : eps.data) e = eps_stream.normal();
      VaeLossIds ids = vae_loss_tape(tape, vae, h, target, std::move(eps));

      Tape::Id t_onehot = tape.constant({n, nc}, std::move(onehot));
      Tape::Id cls = class_loss_tape(tape, ids.z, vae.partition(), t_onehot,
                                     vae.config().variant);
      Tape::Id total = tape.add(ids.total, tape.affine(cls, lambda, 0.0));

      adam.zero_grad();
      tape.backward(total);
      adam.step();

      vae_sum += tape.value(ids.total).data[0] * static_cast<double>(n);
      class_sum += tape.value(cls).data[0] * static_cast<double>(n);
    }
    result.vae_loss.push_back(vae_sum / static_cast<double>(order.size()));
    result.class_loss.push_back(class_sum / static_cast<double>(order.size()));
  }
  return result;
}

double masked_log_likelihood(const RegularizedVae& vae, const double* h, std::size_t cls,
                             std::size_t num_mc, RngStream& rng) {
  if (cls >= vae.num_classes())
    throw ContractError("masked_log_likelihood: class " + std::to_string(cls) + " out of range");
  if (num_mc == 0) throw ContractError("masked_log_likelihood: num_mc must be positive");

  const std::size_t lat = vae.latent_dim();
  const std::size_t dim = vae.input_dim();
  const LatentPartition& part = vae.partition();

  std::vector<double> mu(lat), lv(lat);
  vae.encode(h, 1, mu.data(), lv.data());

  double kl = 0.0;
  for (std::size_t j = 0; j < lat; ++j) {
    if (vae.config().kl_mask == KlMask::ExcludeBlock && j >= part.block_begin(cls) &&
        j < part.block_end(cls))
      continue;
    kl += -0.5 * (1.0 + lv[j] - mu[j] * mu[j] - std::exp(lv[j]));
  }

  // draws, with the class block forced absent
  std::vector<double> z(num_mc * lat);
  for (std::size_t l = 0; l < num_mc; ++l)
    for (std::size_t j = 0; j < lat; ++j)
      z[l * lat + j] = mu[j] + std::exp(0.5 * lv[j]) * rng.normal();
  for (std::size_t l = 0; l < num_mc; ++l)
    std::fill(z.begin() + l * lat + part.block_begin(cls),
              z.begin() + l * lat + part.block_end(cls), 0.0);

  std::vector<double> h_hat(num_mc * dim);
  vae.decode(z.data(), num_mc, h_hat.data());

  double recon_sum = 0.0;
  for (std::size_t l = 0; l < num_mc; ++l) {
    const double* hh = h_hat.data() + l * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = h[j] - hh[j];
      acc += d * d;
    }
    recon_sum += 0.5 * acc;
  }
  const double mean_loss = recon_sum / static_cast<double>(num_mc) + kl;
  if (!std::isfinite(mean_loss))
    throw NumericError("masked_log_likelihood: non-finite bound for class " +
                       std::to_string(cls));
  return -mean_loss;
}

}  // namespace vabal
