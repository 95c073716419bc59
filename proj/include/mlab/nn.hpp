#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlab/linalg.hpp"
#include "mlab/rng.hpp"
#include "mlab/sampling.hpp"

namespace mlab::nn {

// Bias placement in a hidden layer. `after_relu` is the layer map
// ReLU(W h) + b; `inside_relu` is the conventional ReLU(W h + b). Targets
// that realize kinks away from the coordinate hyperplanes need the inside
// form; after_relu is the default.
enum class BiasPlacement { after_relu, inside_relu };

struct Layer {
  Matrix weights;  // d_out x d_in
  Vec bias;        // d_out
};

// Scalar-output feedforward ReLU network: L hidden layers and a linear
// readout. Used both as a frozen target representation and as a trainable
// student.
class ReluNetwork {
 public:
  ReluNetwork(std::vector<Layer> layers, Vec readout,
              BiasPlacement placement = BiasPlacement::after_relu)
      : layers_(std::move(layers)), readout_(std::move(readout)), placement_(placement) {
    if (layers_.empty()) throw std::domain_error("ReluNetwork: depth must be >= 1");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.weights.rows() != layer.bias.size())
        throw std::invalid_argument("ReluNetwork: bias/weight shape mismatch");
      if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
        throw std::invalid_argument("ReluNetwork: layer shape chain broken");
      for (double w : layer.weights.data())
        if (!std::isfinite(w)) throw std::invalid_argument("ReluNetwork: non-finite weight");
      for (double b : layer.bias)
        if (!std::isfinite(b)) throw std::invalid_argument("ReluNetwork: non-finite bias");
    }
    if (readout_.size() != layers_.back().weights.rows())
      throw std::invalid_argument("ReluNetwork: readout shape mismatch");
  }

  std::size_t input_dim() const { return layers_.front().weights.cols(); }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const Vec& readout() const { return readout_; }
  Vec& readout() { return readout_; }
  BiasPlacement placement() const { return placement_; }

  double forward(const Vec& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("forward: input dim mismatch");
    Vec h = x;
    for (const auto& layer : layers_) h = activate(layer, h);
    return dot(readout_, h);
  }

  // Forward pass retaining pre-activations and activations for backprop.
  struct Trace {
    std::vector<Vec> pre;   // z_l
    std::vector<Vec> post;  // h_l (post[0] is the input)
    double output = 0.0;
  };

  Trace forward_trace(const Vec& x) const {
    Trace t;
    t.post.push_back(x);
    Vec h = x;
    for (const auto& layer : layers_) {
      Vec z = layer.weights.apply(h);
      if (placement_ == BiasPlacement::inside_relu)
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
      t.pre.push_back(z);
      Vec out(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = (z[i] > 0.0) ? z[i] : 0.0;
        if (placement_ == BiasPlacement::after_relu) out[i] += layer.bias[i];
      }
      h = out;
      t.post.push_back(h);
    }
    t.output = dot(readout_, h);
    return t;
  }

 private:
  Vec activate(const Layer& layer, const Vec& h) const {
    Vec z = layer.weights.apply(h);
    if (placement_ == BiasPlacement::inside_relu) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] += layer.bias[i];
        z[i] = (z[i] > 0.0) ? z[i] : 0.0;
      }
    } else {
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = ((z[i] > 0.0) ? z[i] : 0.0) + layer.bias[i];
      }
    }
    return z;
  }

  std::vector<Layer> layers_;
  Vec readout_;
  BiasPlacement placement_;
};

// Gradient container congruent to a network's parameters.
struct NetGradient {
  std::vector<Layer> layers;
  Vec readout;

  static NetGradient zeros_like(const ReluNetwork& net) {
    NetGradient g;
    for (const auto& layer : net.layers()) {
      Layer zl;
      zl.weights = Matrix(layer.weights.rows(), layer.weights.cols(), 0.0);
      zl.bias = Vec(layer.bias.size(), 0.0);
      g.layers.push_back(std::move(zl));
    }
    g.readout = Vec(net.readout().size(), 0.0);
    return g;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) {
      for (double w : l.weights.data()) s += w * w;
      for (double b : l.bias) s += b * b;
    }
    for (double v : readout) s += v * v;
    return s;
  }
};

// Reverse-mode gradient of the mean squared error over a batch. The ReLU
// subgradient at exactly 0 is taken to be 0; the parity targets sit on
// kinks at Boolean inputs, so this choice is load-bearing and pinned by
// tests.
inline NetGradient mse_grad(const ReluNetwork& net, const std::vector<LabeledSample>& batch) {
  if (batch.empty()) throw std::domain_error("mse_grad: empty batch");
  NetGradient grad = NetGradient::zeros_like(net);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const auto& layers = net.layers();
  const bool inside = net.placement() == BiasPlacement::inside_relu;

  for (const auto& sample : batch) {
    const auto trace = net.forward_trace(sample.x);
    const double dout = 2.0 * (trace.output - sample.y) * inv_batch;

    // Readout.
    for (std::size_t i = 0; i < grad.readout.size(); ++i)
      grad.readout[i] += dout * trace.post.back()[i];

    Vec dh = scaled(net.readout(), dout);
    for (std::size_t li = layers.size(); li-- > 0;) {
      const Layer& layer = layers[li];
      const Vec& z = trace.pre[li];
      const Vec& h_in = trace.post[li];
      Vec dz(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double gate = (z[i] > 0.0) ? 1.0 : 0.0;
        if (inside) {
          dz[i] = dh[i] * gate;
          grad.layers[li].bias[i] += dz[i];
        } else {
          grad.layers[li].bias[i] += dh[i];
          dz[i] = dh[i] * gate;
        }
      }
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double dzi = dz[i];
        if (dzi == 0.0) continue;
        for (std::size_t j = 0; j < h_in.size(); ++j)
          grad.layers[li].weights(i, j) += dzi * h_in[j];
      }
      if (li > 0) dh = layer.weights.apply_transposed(dz);
    }
  }
  return grad;
}

inline double mse(const ReluNetwork& net, const std::vector<LabeledSample>& data) {
  if (data.empty()) throw std::domain_error("mse: empty dataset");
  double s = 0.0;
  for (const auto& sample : data) {
    const double r = net.forward(sample.x) - sample.y;
    s += r * r;
  }
  return s / static_cast<double>(data.size());
}

// MSE divided by the mean squared label of the same set. Targets are
// RMS-normalized, so an untrained student sits near 1.
inline double relative_mse(const ReluNetwork& net, const std::vector<LabeledSample>& data) {
  double denom = 0.0;
  for (const auto& sample : data) denom += sample.y * sample.y;
  denom = std::max(denom / static_cast<double>(data.size()), 1e-12);
  return mse(net, data) / denom;
}

// Frobenius relaxation of the network's Lipschitz constant:
// |v| * prod_l |W_l|_F. Bias placement does not enter.
inline double lipschitz_bound(const ReluNetwork& net) {
  double bound = norm(net.readout());
  for (const auto& layer : net.layers()) bound *= layer.weights.frobenius_norm();
  return bound;
}

inline ReluNetwork scale_readout(const ReluNetwork& net, double factor) {
  ReluNetwork scaled_net = net;
  for (double& v : scaled_net.readout()) v *= factor;
  return scaled_net;
}

struct NormalizedTarget {
  ReluNetwork net;
  double scale = 1.0;
};

// Rescales the readout so the empirical RMS output over a sampled batch is
// one. Refuses degenerate targets whose output is numerically zero.
inline NormalizedTarget normalize_target(const ReluNetwork& net, const PointSampler& sampler,
                                         std::size_t batch, Rng& rng) {
  if (batch == 0) throw std::domain_error("normalize_target: batch must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double out = net.forward(sampler(rng));
    sq += out * out;
  }
  const double rms = std::sqrt(sq / static_cast<double>(batch));
  if (rms < 1e-9) throw std::domain_error("normalize_target: target output is degenerate");
  return {scale_readout(net, 1.0 / rms), 1.0 / rms};
}

// Gaussian-initialized network: weight entries N(0, gain^2 / fan_in),
// biases zero, readout N(0, gain^2 / width_L).
inline ReluNetwork random_network(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                  BiasPlacement placement, Rng& rng, double gain = 1.0) {
  if (hidden.empty()) throw std::domain_error("random_network: need at least one hidden layer");
  std::vector<Layer> layers;
  std::size_t fan_in = input_dim;
  for (std::size_t width : hidden) {
    Layer layer;
    layer.weights = Matrix(width, fan_in);
    const double stddev = gain / std::sqrt(static_cast<double>(fan_in));
    for (double& w : layer.weights.data()) w = rng.normal(0.0, stddev);
    layer.bias = Vec(width, 0.0);
    layers.push_back(std::move(layer));
    fan_in = width;
  }
  Vec readout(fan_in);
  const double vstd = gain / std::sqrt(static_cast<double>(fan_in));
  for (double& v : readout) v = rng.normal(0.0, vstd);
  return ReluNetwork(std::move(layers), std::move(readout), placement);
}

enum class OptimizerKind { sgd, adam };

// Training schedule. The effective learning rate is
// base_learning_rate * exp(lr_log_multiplier), with the multiplier drawn
// once per run from Unif([-2, 1]) by the experiment harness.
struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double base_learning_rate = 1e-3;
  double lr_log_multiplier = 0.0;
  int batch_size = 128;
  int steps = 1000;
  std::uint64_t seed = 0;
  bool fresh_batches = false;
  int eval_every = 200;

  double effective_lr() const { return base_learning_rate * std::exp(lr_log_multiplier); }

  void validate() const {
    if (base_learning_rate < 0.0) throw std::domain_error("TrainConfig: learning rate < 0");
    if (lr_log_multiplier < -2.0 - 1e-12 || lr_log_multiplier > 1.0 + 1e-12)
      throw std::domain_error("TrainConfig: lr multiplier outside [-2, 1]");
    if (batch_size < 1) throw std::domain_error("TrainConfig: batch size < 1");
    if (steps < 0) throw std::domain_error("TrainConfig: negative step count");
  }
};

using BatchSampler = std::function<std::vector<LabeledSample>(Rng&)>;

// Minibatches drawn with replacement from a fixed training set.
inline BatchSampler minibatches(std::vector<LabeledSample> dataset, int batch_size) {
  if (dataset.empty()) throw std::domain_error("minibatches: empty dataset");
  return [dataset = std::move(dataset), batch_size](Rng& rng) {
    std::vector<LabeledSample> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i)
      batch.push_back(dataset[rng.uniform_index(dataset.size())]);
    return batch;
  };
}

// A fresh i.i.d. batch per call, for the hard-regime protocol.
inline BatchSampler fresh_batches(LabeledSampler sampler, int batch_size) {
  return [sampler = std::move(sampler), batch_size](Rng& rng) {
    std::vector<LabeledSample> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) batch.push_back(sampler(rng));
    return batch;
  };
}

struct TraceRow {
  int step = 0;
  double train_mse = 0.0;  // batch MSE before the update at `step`
  double test_mse = 0.0;   // relative MSE on the eval set
  double lr = 0.0;
};

struct TrainResult {
  ReluNetwork net;
  std::vector<TraceRow> trace;
  bool diverged = false;

  double final_test_mse() const { return trace.empty() ? 1.0 : trace.back().test_mse; }
};

namespace detail {

struct AdamState {
  NetGradient m;
  NetGradient v;
  int step = 0;
};

inline void apply_update(ReluNetwork& net, const NetGradient& grad, double lr,
                         OptimizerKind kind, AdamState& adam) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto update = [&](double& param, double g, double& m, double& v) {
    if (kind == OptimizerKind::sgd) {
      param -= lr * g;
      return;
    }
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(beta1, adam.step));
    const double vhat = v / (1.0 - std::pow(beta2, adam.step));
    param -= lr * mhat / (std::sqrt(vhat) + eps);
  };

  ++adam.step;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (std::size_t i = 0; i < layer.weights.data().size(); ++i)
      update(layer.weights.data()[i], grad.layers[l].weights.data()[i],
             adam.m.layers[l].weights.data()[i], adam.v.layers[l].weights.data()[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      update(layer.bias[i], grad.layers[l].bias[i], adam.m.layers[l].bias[i],
             adam.v.layers[l].bias[i]);
  }
  for (std::size_t i = 0; i < net.readout().size(); ++i)
    update(net.readout()[i], grad.readout[i], adam.m.readout[i], adam.v.readout[i]);
}

inline bool finite_params(const ReluNetwork& net) {
  for (const auto& layer : net.layers()) {
    for (double w : layer.weights.data())
      if (!std::isfinite(w)) return false;
    for (double b : layer.bias)
      if (!std::isfinite(b)) return false;
  }
  for (double v : net.readout())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace detail

// Runs the configured optimizer. Deterministic given (config, student,
// data source): summation order is fixed and the generator is owned by the
// run. A non-finite loss truncates the trace and flags divergence instead
// of failing.
inline TrainResult train(const ReluNetwork& student, const BatchSampler& next_batch,
                         const TrainConfig& cfg, const std::vector<LabeledSample>& eval_set) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrainResult result{student, {}, false};
  detail::AdamState adam{NetGradient::zeros_like(student), NetGradient::zeros_like(student), 0};
  const double lr = cfg.effective_lr();

  const auto record = [&](int step, double batch_mse) {
    const double rel = eval_set.empty() ? 0.0 : relative_mse(result.net, eval_set);
    result.trace.push_back({step, batch_mse, rel, lr});
  };

  record(0, eval_set.empty() ? 0.0 : mse(result.net, eval_set));
  for (int step = 1; step <= cfg.steps; ++step) {
    const std::vector<LabeledSample> batch = next_batch(rng);
    const double batch_mse = mse(result.net, batch);
    if (!std::isfinite(batch_mse)) {
      result.diverged = true;
      break;
    }
    const NetGradient grad = mse_grad(result.net, batch);
    detail::apply_update(result.net, grad, lr, cfg.optimizer, adam);
    if (!detail::finite_params(result.net)) {
      result.diverged = true;
      break;
    }
    if (step % cfg.eval_every == 0 || step == cfg.steps) record(step, batch_mse);
  }
  return result;
}

}  // namespace mlab::nn
