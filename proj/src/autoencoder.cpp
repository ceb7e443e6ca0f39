#include "lgm/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgm/error.hpp"
#include "lgm/random.hpp"

namespace lgm {

namespace {

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::logistic: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

// Derivative with respect to the pre-activation, given pre- and post-activation.
Matrix activation_slope(const Matrix& z, const Matrix& h, Activation a) {
  switch (a) {
    case Activation::identity: return Matrix::Ones(z.rows(), z.cols());
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::logistic: return (h.array() * (1.0 - h.array())).matrix();
  }
  return Matrix::Ones(z.rows(), z.cols());
}

// Layer pointers in forward order across encoder and decoder.
template <typename Model>
auto all_layers(Model& model) {
  using Layer = std::conditional_t<std::is_const_v<Model>, const DenseLayer, DenseLayer>;
  std::vector<Layer*> layers;
  for (auto& l : model.encoder()) layers.push_back(&l);
  for (auto& l : model.decoder()) layers.push_back(&l);
  return layers;
}

// Columns are samples: h is width x batch.
Matrix forward(const std::vector<DenseLayer>& layers, Matrix h) {
  for (const auto& l : layers) h = activate((l.weight * h).colwise() + l.bias, l.activation);
  return h;
}

void check_chain(const std::vector<DenseLayer>& layers, const char* what) {
  if (layers.empty()) throw InvalidArgument(std::string(what) + " has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.bias.size() != l.outputs()) throw InvalidArgument(std::string(what) + ": bias width mismatch");
    if (k > 0 && l.inputs() != layers[k - 1].outputs())
      throw InvalidArgument(std::string(what) + ": layer widths do not chain");
    if (!l.weight.allFinite() || !l.bias.allFinite()) throw NumericError(std::string(what) + ": non-finite parameters");
  }
}

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
};

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::logistic: return "logistic";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "logistic" || name == "sigmoid") return Activation::logistic;
  throw InvalidArgument("unknown activation '" + name + "'");
}

std::string to_string(Loss l) { return l == Loss::squared_error ? "se" : "bce"; }

Loss parse_loss(const std::string& name) {
  if (name == "se" || name == "squared_error") return Loss::squared_error;
  if (name == "bce" || name == "binary_cross_entropy") return Loss::binary_cross_entropy;
  throw InvalidArgument("unknown loss '" + name + "'");
}

MlpAutoencoder::MlpAutoencoder(std::vector<DenseLayer> encoder, std::vector<DenseLayer> decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  check_chain(encoder_, "encoder");
  check_chain(decoder_, "decoder");
  if (decoder_.front().inputs() != encoder_.back().outputs())
    throw InvalidArgument("decoder input width must equal the latent width");
  if (decoder_.back().outputs() != encoder_.front().inputs())
    throw InvalidArgument("decoder output width must equal the input width");
}

Matrix MlpAutoencoder::encode(const Matrix& x) const {
  if (x.cols() != input_dim())
    throw InvalidArgument("encode: expected width " + std::to_string(input_dim()) + ", got " + std::to_string(x.cols()));
  return forward(encoder_, x.transpose()).transpose();
}

Matrix MlpAutoencoder::decode(const Matrix& y) const {
  if (y.cols() != latent_dim())
    throw InvalidArgument("decode: expected width " + std::to_string(latent_dim()) + ", got " + std::to_string(y.cols()));
  return forward(decoder_, y.transpose()).transpose();
}

std::size_t MlpAutoencoder::parameter_count() const {
  std::size_t count = 0;
  for (const auto* l : all_layers(*this)) count += static_cast<std::size_t>(l->weight.size() + l->bias.size());
  return count;
}

MlpAutoencoder init_autoencoder(const ArchitectureConfig& arch, std::uint64_t seed) {
  if (arch.input_dim < 1 || arch.latent_dim < 1) throw InvalidArgument("autoencoder widths must be positive");
  Rng rng(seed);
  auto make = [&](Index in, Index out, Activation a) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer l{Matrix(out, in), Vector(out), a};
    for (Index i = 0; i < out; ++i)
      for (Index j = 0; j < in; ++j) l.weight(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    for (Index i = 0; i < out; ++i) l.bias(i) = bound * (2.0 * rng.uniform() - 1.0);
    return l;
  };
  std::vector<Index> widths{arch.input_dim};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(arch.latent_dim);

  std::vector<DenseLayer> encoder, decoder;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const bool last = k + 2 == widths.size();
    encoder.push_back(make(widths[k], widths[k + 1], last ? arch.latent_activation : arch.hidden_activation));
  }
  for (std::size_t k = widths.size() - 1; k > 0; --k) {
    const bool last = k == 1;
    decoder.push_back(make(widths[k], widths[k - 1], last ? arch.output_activation : arch.hidden_activation));
  }
  return MlpAutoencoder(std::move(encoder), std::move(decoder));
}

double reconstruction_loss(const MlpAutoencoder& model, const Matrix& batch, Loss loss, Gradients* grad) {
  if (batch.cols() != model.input_dim()) throw InvalidArgument("reconstruction_loss: width mismatch");
  const auto layers = all_layers(model);
  if (loss == Loss::binary_cross_entropy && layers.back()->activation != Activation::logistic)
    throw InvalidArgument("binary cross-entropy needs a logistic output layer");

  const Matrix target = batch.transpose();
  std::vector<Matrix> pre, post;
  post.push_back(target);
  for (const auto* l : layers) {
    pre.push_back((l->weight * post.back()).colwise() + l->bias);
    post.push_back(activate(pre.back(), l->activation));
  }
  const double count = static_cast<double>(target.size());
  const Matrix& out = post.back();

  double value = 0.0;
  Matrix delta;
  if (loss == Loss::squared_error) {
    const Matrix diff = out - target;
    value = diff.squaredNorm() / count;
    if (grad) delta = (2.0 / count) * diff.cwiseProduct(activation_slope(pre.back(), out, layers.back()->activation));
  } else {
    // From the logits: max(z, 0) - z t + log(1 + exp(-|z|)).
    const auto& z = pre.back().array();
    value = (z.max(0.0) - z * target.array() + (1.0 + (-z.abs()).exp()).log()).sum() / count;
    if (grad) delta = (out - target) / count;
  }
  if (!grad) return value;

  const std::size_t L = layers.size();
  grad->weight.assign(L, Matrix());
  grad->bias.assign(L, Vector());
  for (std::size_t k = L; k-- > 0;) {
    grad->weight[k] = delta * post[k].transpose();
    grad->bias[k] = delta.rowwise().sum();
    if (k > 0) {
      const Matrix back = layers[k]->weight.transpose() * delta;
      delta = back.cwiseProduct(activation_slope(pre[k - 1], post[k], layers[k - 1]->activation));
    }
  }
  return value;
}

TrainResult train(MlpAutoencoder model, const Matrix& data, const TrainConfig& config) {
  const Index n = data.rows();
  if (data.cols() != model.input_dim()) throw InvalidArgument("train: data width does not match the model");
  if (config.batch_size < 1 || config.batch_size > n)
    throw InvalidArgument("train: batch_size " + std::to_string(config.batch_size) + " must be in [1, n=" +
                          std::to_string(n) + "]");
  if (config.epochs < 1) throw InvalidArgument("train: epochs must be positive");
  if (!(config.learning_rate > 0.0) || config.weight_decay < 0.0)
    throw InvalidArgument("train: learning_rate must be positive and weight_decay nonnegative");
  if (!data.allFinite()) throw DataError("train: data contains non-finite values");

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto layers = all_layers(model);
  AdamState adam;
  for (const auto* l : layers) {
    adam.m_w.push_back(Matrix::Zero(l->weight.rows(), l->weight.cols()));
    adam.v_w.push_back(Matrix::Zero(l->weight.rows(), l->weight.cols()));
    adam.m_b.push_back(Vector::Zero(l->bias.size()));
    adam.v_b.push_back(Vector::Zero(l->bias.size()));
  }

  Rng rng(config.seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<double> history;
  Gradients grad;
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    double epoch_loss = 0.0;
    int batch_no = 0;
    for (Index start = 0; start < n; start += config.batch_size) {
      ++batch_no;
      const Index size = std::min(config.batch_size, n - start);
      Matrix batch(size, data.cols());
      for (Index r = 0; r < size; ++r) batch.row(r) = data.row(perm[static_cast<std::size_t>(start + r)]);

      const double value = reconstruction_loss(model, batch, config.loss, &grad);
      if (!std::isfinite(value)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));
      }
      epoch_loss += value * static_cast<double>(size);

      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < layers.size(); ++k) {
        auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
          m = beta1 * m + (1.0 - beta1) * g;
          v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
          param.array() -= config.learning_rate *
                           ((m.array() / c1) / ((v.array() / c2).sqrt() + eps) + config.weight_decay * param.array());
        };
        update(layers[k]->weight, adam.m_w[k], adam.v_w[k], grad.weight[k]);
        update(layers[k]->bias, adam.m_b[k], adam.v_b[k], grad.bias[k]);
      }
    }
    history.push_back(epoch_loss / static_cast<double>(n));
  }
  return TrainResult{std::move(model), std::move(history)};
}

TrainResult train(const Matrix& data, const ArchitectureConfig& arch, const TrainConfig& config) {
  ArchitectureConfig a = arch;
  if (a.input_dim == 0) a.input_dim = data.cols();
  return train(init_autoencoder(a, config.seed), data, config);
}

double gradient_check(const MlpAutoencoder& model, const Matrix& batch, Loss loss, double step) {
  Gradients analytic;
  reconstruction_loss(model, batch, loss, &analytic);
  MlpAutoencoder probe = model;
  auto layers = all_layers(probe);

  double worst = 0.0;
  auto check = [&](double& param, double g_analytic) {
    const double saved = param;
    param = saved + step;
    const double plus = reconstruction_loss(probe, batch, loss);
    param = saved - step;
    const double minus = reconstruction_loss(probe, batch, loss);
    param = saved;
    const double g_fd = (plus - minus) / (2.0 * step);
    worst = std::max(worst, std::abs(g_analytic - g_fd) / std::max(1e-8, std::abs(g_analytic) + std::abs(g_fd)));
  };
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& w = layers[k]->weight;
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) check(w(i, j), analytic.weight[k](i, j));
    auto& b = layers[k]->bias;
    for (Index i = 0; i < b.size(); ++i) check(b(i), analytic.bias[k](i));
  }
  return worst;
}

}  // namespace lgm
