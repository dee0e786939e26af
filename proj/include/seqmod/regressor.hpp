#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seqmod/ami.hpp"
#include "seqmod/matrix.hpp"

namespace seqmod {

struct RegressorConfig {
  std::size_t input_dim = 0;  // p, set from the training inputs
  std::size_t hidden_layers = 3;
  std::size_t hidden_width = 128;
  double beta = 1.0;    // slope for under-prediction (target above output)
  double gamma = 0.01;  // slope for over-prediction
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;       // epochs without validation improvement
  std::size_t plateau_epochs = 20;  // halve the learning rate after these
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const RegressorConfig&, const RegressorConfig&) = default;
};

/// Fully connected layer, weights stored out x in.
struct DenseLayer {
  Matrix<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Trained length regressor: feature selection, z-score normalization, and
/// a ReLU MLP with a single linear output.
struct Regressor {
  RegressorConfig config;
  std::size_t descriptor_dim = 0;            // n of the full descriptor
  std::vector<std::size_t> feature_indices;  // p columns of the descriptor
  std::vector<std::size_t> dropped_features; // zero train variance
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> allowed_lengths;  // ascending
  std::vector<DenseLayer> layers;            // hidden layers, then output
  CuratedFeatureSet curation;                // provenance of feature_indices

  friend bool operator==(const Regressor&, const Regressor&) = default;
};

/// (1/b) * sum_i f(s_i - s_hat_i)^2 with f(x) = beta*x for x >= 0, gamma*x
/// otherwise.
double leaky_relu_mse(std::span<const double> targets,
                      std::span<const double> predictions, double beta,
                      double gamma);

/// Randomly initialised network (uniform +-1/sqrt(fan_in) for weights and
/// biases) with identity normalization over `input_dim` inputs.
Regressor make_regressor(const RegressorConfig& config);

/// Raw prediction for a p-vector of selected (unnormalized) features.
double forward(const Regressor& model, std::span<const double> input);

struct LossGradient {
  double loss = 0.0;
  std::vector<DenseLayer> grads;  // same shapes as Regressor::layers
};

/// Batch loss and its gradient w.r.t. every weight and bias. Rows of
/// `inputs` are p-vectors of selected, unnormalized features.
LossGradient loss_gradient(const Regressor& model, const Matrix<double>& inputs,
                           std::span<const double> targets);

struct TrainingSet {
  Matrix<double> inputs;        // samples x p
  std::vector<double> targets;  // sequence lengths
};

struct EpochRecord {
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainOptions {
  RegressorConfig config;
  std::vector<std::size_t> feature_indices;  // descriptor column per input
  std::size_t descriptor_dim = 0;
  std::vector<std::size_t> allowed_lengths;
  CuratedFeatureSet curation;
};

/// Mini-batch Adam on leaky_relu_mse with plateau halving and early stopping
/// on validation loss. Returns the best-validation snapshot. Deterministic
/// for a given seed. `history`, when given, receives one record per epoch.
Regressor train(const TrainingSet& train, const TrainingSet& valid,
                const TrainOptions& options,
                std::vector<EpochRecord>* history = nullptr);

/// Smallest allowed length >= raw, clamped into [min, max] of the set.
std::size_t quantize_length(double raw, std::span<const std::size_t> allowed);

/// Selects, normalizes, and forwards a full descriptor, then quantizes.
std::size_t predict_length(const Regressor& model,
                           std::span<const double> descriptor);
double predict_raw(const Regressor& model, std::span<const double> descriptor);

/// Binary "SQML" v1 artifact; save/load reproduces the model bit-exactly.
void save_regressor(const std::filesystem::path& path, const Regressor& model);
Regressor load_regressor(const std::filesystem::path& path);

}  // namespace seqmod
