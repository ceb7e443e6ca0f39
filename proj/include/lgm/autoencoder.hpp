#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lgm/core.hpp"

namespace lgm {

enum class Activation { identity, relu, logistic };
enum class Loss { squared_error, binary_cross_entropy };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);
std::string to_string(Loss l);
Loss parse_loss(const std::string& name);

struct DenseLayer {
  Matrix weight;  //!< out x in
  Vector bias;    //!< out
  Activation activation = Activation::identity;

  Index inputs() const { return weight.cols(); }
  Index outputs() const { return weight.rows(); }
};

//! Fully connected encoder/decoder pair. Rows of the input matrices are
//! samples.
class MlpAutoencoder {
public:
  MlpAutoencoder(std::vector<DenseLayer> encoder, std::vector<DenseLayer> decoder);

  const std::vector<DenseLayer>& encoder() const { return encoder_; }
  const std::vector<DenseLayer>& decoder() const { return decoder_; }
  std::vector<DenseLayer>& encoder() { return encoder_; }
  std::vector<DenseLayer>& decoder() { return decoder_; }
  Index input_dim() const { return encoder_.front().inputs(); }
  Index latent_dim() const { return encoder_.back().outputs(); }

  //! k x input_dim -> k x latent_dim. Throws InvalidArgument on width mismatch.
  Matrix encode(const Matrix& x) const;
  //! k x latent_dim -> k x input_dim.
  Matrix decode(const Matrix& y) const;
  Matrix reconstruct(const Matrix& x) const { return decode(encode(x)); }

  std::size_t parameter_count() const;

private:
  std::vector<DenseLayer> encoder_;
  std::vector<DenseLayer> decoder_;
};

struct ArchitectureConfig {
  Index input_dim = 0;
  Index latent_dim = 8;
  //! Widths of the hidden layers on each side (mirrored for the decoder).
  std::vector<Index> hidden = {64};
  Activation hidden_activation = Activation::relu;
  Activation latent_activation = Activation::identity;
  Activation output_activation = Activation::logistic;
};

//! Weights and biases uniform on +-1/sqrt(fan_in).
MlpAutoencoder init_autoencoder(const ArchitectureConfig& arch, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  Index batch_size = 100;
  int epochs = 50;
  std::uint64_t seed = 0;
  Loss loss = Loss::binary_cross_entropy;
};

struct TrainResult {
  MlpAutoencoder model;
  //! Mean per-element loss of each epoch.
  std::vector<double> loss_history;
};

//! Minibatch Adam (beta1 0.9, beta2 0.999, eps 1e-8) with decoupled weight
//! decay. Batches are reshuffled every epoch from config.seed. Throws
//! InvalidArgument if batch_size > n and NumericError on a non-finite loss.
TrainResult train(MlpAutoencoder model, const Matrix& data, const TrainConfig& config);

//! init_autoencoder(arch, config.seed) followed by train.
TrainResult train(const Matrix& data, const ArchitectureConfig& arch, const TrainConfig& config);

//! Per-parameter gradients, encoder layers first, then decoder layers.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

//! Mean per-element reconstruction loss of `batch`; fills `grad` if given.
//! Binary cross-entropy requires a logistic output layer.
double reconstruction_loss(const MlpAutoencoder& model, const Matrix& batch, Loss loss, Gradients* grad = nullptr);

//! Max over parameters of |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|), where g_fd
//! is a central difference with the given step.
double gradient_check(const MlpAutoencoder& model, const Matrix& batch, Loss loss, double step = 1e-5);

}  // namespace lgm
