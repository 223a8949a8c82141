#pragma once

// Dense denoising autoencoder: one hidden encoder layer and one decoder layer,
//   e = rho_h(W c + b),  c_hat = rho_o(W' e + b'),
// trained with Adam on the mean squared pixel error against a clean target.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace lis::dae {

enum class Activation { kLeakyRelu, kLogistic, kLinear };

struct Config {
  std::size_t latent = 16;
  Activation hidden = Activation::kLeakyRelu;
  Activation output = Activation::kLogistic;
  double leak = 0.2;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

struct DaeModel {
  std::size_t input = 0;   // R
  std::size_t latent = 0;  // l
  Config config;
  std::vector<double> w;        // l x R, row-major
  std::vector<double> b;        // l
  std::vector<double> w_prime;  // R x l, row-major
  std::vector<double> b_prime;  // R

  std::size_t parameter_count() const { return w.size() + b.size() + w_prime.size() + b_prime.size(); }
};

struct ImagePair {
  std::vector<double> corrupted;  // c_r in [0, 1]^R
  std::vector<double> target;     // t_r in [0, 1]^R
  double snr_corrupted_db = 0.0;
  double snr_target_db = 0.0;
};

/// Seeded uniform fan-in initialization: W ~ U(+-1/sqrt(R)), W' ~ U(+-1/sqrt(l)), zero biases.
DaeModel init_model(std::size_t input, const Config& config);

/// Throws std::invalid_argument on inconsistent shapes or non-finite parameters.
void validate(const DaeModel& model);

struct Forward {
  std::vector<double> latent;  // e
  std::vector<double> output;  // c_hat
};

Forward forward(const DaeModel& model, std::span<const double> input);
std::vector<double> denoise(const DaeModel& model, std::span<const double> input);

/// sum_i (t_i - c_i)^2 / R
double loss(std::span<const double> target, std::span<const double> output);

/// Same layout as the model parameters.
struct Gradients {
  std::vector<double> w, b, w_prime, b_prime;
};

/// Mean loss over pairs[indices] and its gradient with respect to every parameter.
double loss_and_gradients(const DaeModel& model, std::span<const ImagePair> pairs,
                          std::span<const std::size_t> indices, Gradients& grad);

/// Mean loss over all pairs.
double mean_loss(const DaeModel& model, std::span<const ImagePair> pairs);

struct TrainResult {
  DaeModel model;
  std::vector<double> epoch_loss;  // mean training loss seen during each epoch
};

/// Mini-batch Adam from a fresh seeded initialization. Throws std::runtime_error
/// (with epoch and batch) if the loss becomes non-finite.
TrainResult train(std::span<const ImagePair> pairs, const Config& config);

/// Continues training from the given model, using its config.
TrainResult train(DaeModel model, std::span<const ImagePair> pairs);

/// Flat binary checkpoint: magic, version, dims, config, then W, b, W', b' (host byte order).
void save_model(std::ostream& out, const DaeModel& model);
DaeModel load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const DaeModel& model);
DaeModel load_model(const std::filesystem::path& path);

/// CSV "epoch,loss".
void write_loss_csv(std::ostream& out, std::span<const double> epoch_loss);

}  // namespace lis::dae
