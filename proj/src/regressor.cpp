#include "seqmod/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "seqmod/errors.hpp"

namespace seqmod {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'M', 'L'};
constexpr std::uint16_t kVersion = 1;

double slope(double err, double beta, double gamma) {
  return err >= 0.0 ? beta : gamma;
}

// Activations of one batch. acts[0] holds the normalized inputs, acts[l+1]
// the output of layer l (ReLU for hidden layers, identity for the last).
struct Workspace {
  std::vector<Matrix<double>> pre;
  std::vector<Matrix<double>> acts;
};

void dense_forward(const DenseLayer& layer, const Matrix<double>& in,
                   Matrix<double>& out) {
  const std::size_t rows = in.rows(), n_out = layer.weights.rows(),
                    n_in = layer.weights.cols();
  out = Matrix<double>(rows, n_out);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* a = in.row(i).data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = layer.weights.row(o).data();
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < n_in; ++k) acc += a[k] * w[k];
      out(i, o) = acc;
    }
  }
}

// Runs the network on already-normalized inputs.
void forward_normalized(const Regressor& model, const Matrix<double>& x,
                        Workspace& ws) {
  const std::size_t nl = model.layers.size();
  ws.pre.resize(nl);
  ws.acts.resize(nl + 1);
  ws.acts[0] = x;
  for (std::size_t l = 0; l < nl; ++l) {
    dense_forward(model.layers[l], ws.acts[l], ws.pre[l]);
    ws.acts[l + 1] = ws.pre[l];
    if (l + 1 < nl)
      for (auto& v : ws.acts[l + 1].data()) v = std::max(v, 0.0);
  }
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers)
    out.push_back({Matrix<double>(l.weights.rows(), l.weights.cols(), 0.0),
                   std::vector<double>(l.bias.size(), 0.0)});
  return out;
}

// Loss and gradient for normalized inputs; `grads` must be zero-initialized.
double backprop(const Regressor& model, const Matrix<double>& x,
                std::span<const double> targets, Workspace& ws,
                std::vector<DenseLayer>& grads) {
  forward_normalized(model, x, ws);
  const std::size_t b = x.rows();
  const std::size_t nl = model.layers.size();
  const auto& out = ws.acts[nl];
  std::vector<double> pred(b);
  for (std::size_t i = 0; i < b; ++i) pred[i] = out(i, 0);
  const double loss =
      leaky_relu_mse(targets, pred, model.config.beta, model.config.gamma);

  Matrix<double> delta(b, 1);
  for (std::size_t i = 0; i < b; ++i) {
    const double err = targets[i] - pred[i];
    const double s = slope(err, model.config.beta, model.config.gamma);
    delta(i, 0) = -2.0 / static_cast<double>(b) * s * s * err;
  }

  for (std::size_t l = nl; l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& a = ws.acts[l];
    auto& g = grads[l];
    const std::size_t n_out = layer.weights.rows(), n_in = layer.weights.cols();
    for (std::size_t i = 0; i < b; ++i) {
      const double* ai = a.row(i).data();
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta(i, o);
        if (d == 0.0) continue;
        g.bias[o] += d;
        double* gw = g.weights.row(o).data();
        for (std::size_t k = 0; k < n_in; ++k) gw[k] += d * ai[k];
      }
    }
    if (l == 0) break;
    Matrix<double> prev(b, n_in, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      double* pi = prev.row(i).data();
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta(i, o);
        if (d == 0.0) continue;
        const double* w = layer.weights.row(o).data();
        for (std::size_t k = 0; k < n_in; ++k) pi[k] += d * w[k];
      }
      const double* z = ws.pre[l - 1].row(i).data();
      for (std::size_t k = 0; k < n_in; ++k)
        if (z[k] <= 0.0) pi[k] = 0.0;
    }
    delta = std::move(prev);
  }
  return loss;
}

Matrix<double> normalize_rows(const Regressor& model, const Matrix<double>& x) {
  Matrix<double> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(i, j) = (x(i, j) - model.mean[j]) / model.stddev[j];
  return out;
}

struct Adam {
  explicit Adam(const std::vector<DenseLayer>& layers)
      : m(zero_like(layers)), v(zero_like(layers)) {}

  void step(std::vector<DenseLayer>& params, const std::vector<DenseLayer>& g,
            double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kB1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kB2, static_cast<double>(t));
    auto update = [&](std::vector<double>& p, const std::vector<double>& grad,
                      std::vector<double>& mm, std::vector<double>& vv) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        mm[i] = kB1 * mm[i] + (1.0 - kB1) * grad[i];
        vv[i] = kB2 * vv[i] + (1.0 - kB2) * grad[i] * grad[i];
        p[i] -= lr * (mm[i] / c1) / (std::sqrt(vv[i] / c2) + kEps);
      }
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
      update(params[l].weights.data(), g[l].weights.data(), m[l].weights.data(),
             v[l].weights.data());
      update(params[l].bias, g[l].bias, m[l].bias, v[l].bias);
    }
  }

  static constexpr double kB1 = 0.9;
  static constexpr double kB2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<DenseLayer> m, v;
  std::uint64_t t = 0;
};

}  // namespace

void RegressorConfig::validate() const {
  if (hidden_layers < 1 || hidden_width < 1)
    throw ArgumentError("regressor needs at least one hidden layer and unit");
  if (!(beta > 0.0) || !(gamma > 0.0) || gamma > beta)
    throw ArgumentError("loss slopes must satisfy 0 < gamma <= beta");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (plateau_epochs < 1) throw ArgumentError("plateau_epochs must be >= 1");
}

double leaky_relu_mse(std::span<const double> targets,
                      std::span<const double> predictions, double beta,
                      double gamma) {
  if (targets.size() != predictions.size() || targets.empty())
    throw ArgumentError("loss needs equal, non-empty target/prediction vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double err = targets[i] - predictions[i];
    const double f = slope(err, beta, gamma) * err;
    acc += f * f;
  }
  return acc / static_cast<double>(targets.size());
}

Regressor make_regressor(const RegressorConfig& config) {
  config.validate();
  if (config.input_dim < 1) throw ArgumentError("input_dim must be >= 1");
  Regressor model;
  model.config = config;
  model.descriptor_dim = config.input_dim;
  model.feature_indices.resize(config.input_dim);
  std::iota(model.feature_indices.begin(), model.feature_indices.end(), 0);
  model.mean.assign(config.input_dim, 0.0);
  model.stddev.assign(config.input_dim, 1.0);
  model.allowed_lengths = {1};

  std::mt19937_64 rng(config.seed);
  std::size_t fan_in = config.input_dim;
  for (std::size_t l = 0; l <= config.hidden_layers; ++l) {
    const std::size_t fan_out = l < config.hidden_layers ? config.hidden_width : 1;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix<double>(fan_out, fan_in), std::vector<double>(fan_out)};
    for (auto& w : layer.weights.data()) w = dist(rng);
    for (auto& b : layer.bias) b = dist(rng);
    model.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return model;
}

double forward(const Regressor& model, std::span<const double> input) {
  if (input.size() != model.config.input_dim)
    throw ArgumentError("regressor expects " +
                        std::to_string(model.config.input_dim) +
                        " inputs, got " + std::to_string(input.size()));
  std::vector<double> a(input.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!std::isfinite(input[j])) throw ArgumentError("non-finite regressor input");
    a[j] = (input[j] - model.mean[j]) / model.stddev[j];
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    std::vector<double> z(layer.weights.rows());
    for (std::size_t o = 0; o < z.size(); ++o) {
      double acc = layer.bias[o];
      const auto w = layer.weights.row(o);
      for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * w[k];
      z[o] = l + 1 < model.layers.size() ? std::max(acc, 0.0) : acc;
    }
    a = std::move(z);
  }
  return a.front();
}

LossGradient loss_gradient(const Regressor& model, const Matrix<double>& inputs,
                           std::span<const double> targets) {
  if (inputs.cols() != model.config.input_dim || inputs.rows() != targets.size())
    throw ArgumentError("batch shape does not match the regressor");
  LossGradient out;
  out.grads = zero_like(model.layers);
  Workspace ws;
  out.loss = backprop(model, normalize_rows(model, inputs), targets, ws, out.grads);
  return out;
}

Regressor train(const TrainingSet& train_set, const TrainingSet& valid_set,
                const TrainOptions& options, std::vector<EpochRecord>* history) {
  RegressorConfig config = options.config;
  config.validate();
  const std::size_t p = train_set.inputs.cols();
  if (options.feature_indices.size() != p || valid_set.inputs.cols() != p)
    throw ArgumentError("training inputs disagree on feature count");
  if (train_set.inputs.rows() != train_set.targets.size() ||
      valid_set.inputs.rows() != valid_set.targets.size())
    throw ArgumentError("inputs and targets differ in sample count");
  if (train_set.inputs.rows() < config.batch_size)
    throw ArgumentError("training set smaller than one batch");
  if (valid_set.inputs.rows() == 0) throw ArgumentError("validation set is empty");
  if (options.allowed_lengths.empty())
    throw ArgumentError("allowed length set is empty");

  // Per-feature z-score statistics; constant features cannot be scaled.
  const std::size_t n_train = train_set.inputs.rows();
  std::vector<std::size_t> keep;
  std::vector<std::size_t> dropped;
  std::vector<double> mean, stddev;
  for (std::size_t j = 0; j < p; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) mu += train_set.inputs(i, j);
    mu /= static_cast<double>(n_train);
    double ss = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) {
      const double d = train_set.inputs(i, j) - mu;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n_train));
    if (sd > 1e-12) {
      keep.push_back(j);
      mean.push_back(mu);
      stddev.push_back(sd);
    } else {
      dropped.push_back(options.feature_indices[j]);
    }
  }
  if (keep.empty()) throw TrainingError("every training feature is constant");

  config.input_dim = keep.size();
  Regressor model = make_regressor(config);
  model.descriptor_dim = options.descriptor_dim;
  model.feature_indices.clear();
  for (auto j : keep) model.feature_indices.push_back(options.feature_indices[j]);
  model.dropped_features = std::move(dropped);
  model.mean = std::move(mean);
  model.stddev = std::move(stddev);
  model.allowed_lengths = options.allowed_lengths;
  std::sort(model.allowed_lengths.begin(), model.allowed_lengths.end());
  model.curation = options.curation;

  auto reduce = [&](const Matrix<double>& x) {
    Matrix<double> out(x.rows(), keep.size());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t k = 0; k < keep.size(); ++k)
        out(i, k) = (x(i, keep[k]) - model.mean[k]) / model.stddev[k];
    return out;
  };
  const Matrix<double> xtrain = reduce(train_set.inputs);
  const Matrix<double> xvalid = reduce(valid_set.inputs);

  // Shuffling uses its own stream so it does not depend on the layer count.
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  Adam adam(model.layers);
  Workspace ws;
  double lr = config.learning_rate;
  double best_valid = std::numeric_limits<double>::infinity();
  std::vector<DenseLayer> best_layers = model.layers;
  std::size_t since_best = 0;

  auto valid_loss = [&] {
    forward_normalized(model, xvalid, ws);
    std::vector<double> pred(xvalid.rows());
    for (std::size_t i = 0; i < pred.size(); ++i)
      pred[i] = ws.acts.back()(i, 0);
    return leaky_relu_mse(valid_set.targets, pred, config.beta, config.gamma);
  };

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n_train;
         start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(n_train, start + config.batch_size);
      Matrix<double> xb(end - start, keep.size());
      std::vector<double> yb(end - start);
      for (std::size_t i = start; i < end; ++i) {
        std::copy_n(xtrain.row(order[i]).begin(), keep.size(),
                    xb.row(i - start).begin());
        yb[i - start] = train_set.targets[order[i]];
      }
      auto grads = zero_like(model.layers);
      const double loss = backprop(model, xb, yb, ws, grads);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
      epoch_loss += loss * static_cast<double>(end - start);
      adam.step(model.layers, grads, lr);
    }
    epoch_loss /= static_cast<double>(n_train);

    const double vloss = valid_loss();
    if (!std::isfinite(vloss))
      throw TrainingError("non-finite validation loss at epoch " +
                          std::to_string(epoch));
    if (history) history->push_back({epoch_loss, vloss, lr});
    if (vloss < best_valid) {
      best_valid = vloss;
      best_layers = model.layers;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= config.patience) break;
      if (since_best % config.plateau_epochs == 0) lr = std::max(lr * 0.5, 1e-7);
    }
  }
  model.layers = std::move(best_layers);
  return model;
}

std::size_t quantize_length(double raw, std::span<const std::size_t> allowed) {
  if (allowed.empty()) throw ArgumentError("allowed length set is empty");
  if (!std::isfinite(raw)) throw InferenceError("non-finite raw prediction");
  for (auto len : allowed)
    if (static_cast<double>(len) >= raw) return len;
  return allowed.back();
}

double predict_raw(const Regressor& model, std::span<const double> descriptor) {
  if (descriptor.size() != model.descriptor_dim)
    throw ArgumentError("descriptor has " + std::to_string(descriptor.size()) +
                        " features, model expects " +
                        std::to_string(model.descriptor_dim));
  std::vector<double> x;
  x.reserve(model.feature_indices.size());
  for (auto j : model.feature_indices) x.push_back(descriptor[j]);
  const double raw = forward(model, x);
  if (!std::isfinite(raw)) throw InferenceError("non-finite raw prediction");
  return raw;
}

std::size_t predict_length(const Regressor& model,
                           std::span<const double> descriptor) {
  return quantize_length(predict_raw(model, descriptor), model.allowed_lengths);
}

void save_regressor(const std::filesystem::path& path, const Regressor& model) {
  detail::ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  const auto& c = model.config;
  w.put<std::uint64_t>(c.input_dim);
  w.put<std::uint64_t>(c.hidden_layers);
  w.put<std::uint64_t>(c.hidden_width);
  w.put_f64(c.beta);
  w.put_f64(c.gamma);
  w.put<std::uint64_t>(c.batch_size);
  w.put_f64(c.learning_rate);
  w.put<std::uint64_t>(c.max_epochs);
  w.put<std::uint64_t>(c.patience);
  w.put<std::uint64_t>(c.plateau_epochs);
  w.put<std::uint64_t>(c.seed);
  w.put<std::uint64_t>(model.descriptor_dim);
  w.put_sizes(model.feature_indices);
  w.put_sizes(model.dropped_features);
  w.put_reals(model.mean);
  w.put_reals(model.stddev);
  w.put_sizes(model.allowed_lengths);
  w.put_f64(model.curation.alpha);
  w.put_reals(model.curation.scores);
  w.put_sizes(model.curation.retained);
  w.put<std::uint64_t>(model.layers.size());
  for (const auto& l : model.layers) {
    w.put<std::uint64_t>(l.weights.rows());
    w.put<std::uint64_t>(l.weights.cols());
    for (double x : l.weights.data()) w.put_f64(x);
    for (double x : l.bias) w.put_f64(x);
  }
  w.write_to(path);
}

Regressor load_regressor(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  try {
    if (r.get_bytes(4) != std::string(kMagic, 4))
      throw FormatError(path.string() + ": missing SQML magic");
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion)
      throw FormatError(path.string() + ": unsupported model version " +
                        std::to_string(version));
    Regressor m;
    auto& c = m.config;
    c.input_dim = r.get<std::uint64_t>();
    c.hidden_layers = r.get<std::uint64_t>();
    c.hidden_width = r.get<std::uint64_t>();
    c.beta = r.get_f64();
    c.gamma = r.get_f64();
    c.batch_size = r.get<std::uint64_t>();
    c.learning_rate = r.get_f64();
    c.max_epochs = r.get<std::uint64_t>();
    c.patience = r.get<std::uint64_t>();
    c.plateau_epochs = r.get<std::uint64_t>();
    c.seed = r.get<std::uint64_t>();
    m.descriptor_dim = r.get<std::uint64_t>();
    m.feature_indices = r.get_sizes();
    m.dropped_features = r.get_sizes();
    m.mean = r.get_reals();
    m.stddev = r.get_reals();
    m.allowed_lengths = r.get_sizes();
    m.curation.alpha = r.get_f64();
    m.curation.scores = r.get_reals();
    m.curation.retained = r.get_sizes();
    const auto n_layers = r.get<std::uint64_t>();
    if (n_layers != c.hidden_layers + 1)
      throw FormatError(path.string() + ": layer count disagrees with config");
    std::size_t expect_in = c.input_dim;
    for (std::uint64_t l = 0; l < n_layers; ++l) {
      const auto rows = r.get<std::uint64_t>();
      const auto cols = r.get<std::uint64_t>();
      const std::size_t expect_out = l + 1 < n_layers ? c.hidden_width : 1;
      if (rows != expect_out || cols != expect_in)
        throw FormatError(path.string() + ": layer shape does not chain");
      DenseLayer layer{Matrix<double>(rows, cols), std::vector<double>(rows)};
      for (auto& x : layer.weights.data()) x = r.get_f64();
      for (auto& x : layer.bias) x = r.get_f64();
      m.layers.push_back(std::move(layer));
      expect_in = rows;
    }
    if (!r.at_end()) throw SizeError(path.string() + ": trailing bytes");
    if (m.feature_indices.size() != c.input_dim ||
        m.mean.size() != c.input_dim || m.stddev.size() != c.input_dim)
      throw FormatError(path.string() + ": normalization size mismatch");
    for (auto j : m.feature_indices)
      if (j >= m.descriptor_dim)
        throw FormatError(path.string() + ": feature index out of range");
    for (double s : m.stddev)
      if (!(s > 0.0)) throw FormatError(path.string() + ": non-positive stddev");
    if (m.allowed_lengths.empty())
      throw FormatError(path.string() + ": empty allowed length set");
    return m;
  } catch (const SizeError& e) {
    throw SizeError(path.string() + ": " + e.what());
  }
}

}  // namespace seqmod
