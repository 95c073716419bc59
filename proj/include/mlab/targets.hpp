#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mlab/graycode.hpp"
#include "mlab/manifold.hpp"
#include "mlab/nn.hpp"

namespace mlab::targets {

// A subset of coordinate indices (0-based) inside a domain of a given
// dimension. Sorted and duplicate-free.
class ParitySubset {
 public:
  ParitySubset(std::vector<int> indices, int domain_dim)
      : indices_(std::move(indices)), domain_dim_(domain_dim) {
    if (domain_dim < 1) throw std::domain_error("ParitySubset: domain must be positive");
    std::sort(indices_.begin(), indices_.end());
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] < 0 || indices_[i] >= domain_dim)
        throw std::domain_error("ParitySubset: index outside domain");
      if (i > 0 && indices_[i] == indices_[i - 1])
        throw std::domain_error("ParitySubset: duplicate index");
    }
  }

  static ParitySubset from_mask(std::uint64_t mask, int domain_dim) {
    std::vector<int> idx;
    for (int i = 0; i < domain_dim; ++i)
      if ((mask >> i) & 1u) idx.push_back(i);
    return ParitySubset(std::move(idx), domain_dim);
  }

  // Uniformly random non-empty subset.
  static ParitySubset random_nonempty(int domain_dim, Rng& rng) {
    if (domain_dim > 62) throw std::domain_error("ParitySubset: domain too wide");
    const std::uint64_t mask = 1 + rng.uniform_index((std::uint64_t{1} << domain_dim) - 1);
    return ParitySubset::from_mask(mask, domain_dim);
  }

  const std::vector<int>& indices() const { return indices_; }
  int domain_dim() const { return domain_dim_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (int i : indices_) m |= std::uint64_t{1} << i;
    return m;
  }

  bool operator==(const ParitySubset& o) const {
    return domain_dim_ == o.domain_dim_ && indices_ == o.indices_;
  }

 private:
  std::vector<int> indices_;
  int domain_dim_;
};

// Boolean parity sum_{i in S} x_i mod 2.
inline int parity_chi(const ParitySubset& s, const gray::BitString& x) {
  if (static_cast<int>(x.size()) != s.domain_dim())
    throw std::domain_error("parity_chi: width mismatch");
  int acc = 0;
  for (int i : s.indices()) acc ^= x[static_cast<std::size_t>(i)];
  return acc;
}

// Triangle wave of s in [0, |S|]: ascending on even unit intervals,
// descending on odd ones. Seam-free closed form 1 - |1 - (s mod 2)|,
// identical for even and odd |S| and equal to the Boolean parity on
// Boolean inputs. 1-Lipschitz in the coordinate sum.
inline double triangle_wave(double s) {
  const double r = s - 2.0 * std::floor(s / 2.0);
  return 1.0 - std::abs(1.0 - r);
}

inline double continuous_parity(const ParitySubset& s, const Vec& x) {
  if (static_cast<int>(x.size()) != s.domain_dim())
    throw std::invalid_argument("continuous_parity: width mismatch");
  double acc = 0.0;
  for (int i : s.indices()) acc += x[static_cast<std::size_t>(i)];
  return triangle_wave(acc);
}

namespace detail {
// Readout coefficients +1, -2, +2, -2, ... reproduce the triangle wave as
// sum_k c_k ReLU(s - k).
inline double triangle_readout_coefficient(std::size_t k) {
  if (k == 0) return 1.0;
  return (k % 2 == 1) ? -2.0 : 2.0;
}
}  // namespace detail

// Exact single-hidden-layer realization of the continuous parity on
// [0,1]^m: hidden units ReLU(sum_{i in S} x_i - k) for k = 0..|S|. The
// k = |S| unit vanishes on the domain; it completes the advertised
// width-(|S|+1) construction.
inline nn::ReluNetwork parity_as_relu_net(const ParitySubset& s) {
  if (s.empty()) throw std::domain_error("parity_as_relu_net: subset must be non-empty");
  const std::size_t width = s.size() + 1;
  nn::Layer layer;
  layer.weights = Matrix(width, static_cast<std::size_t>(s.domain_dim()), 0.0);
  layer.bias = Vec(width, 0.0);
  Vec readout(width, 0.0);
  for (std::size_t k = 0; k < width; ++k) {
    for (int i : s.indices()) layer.weights(k, static_cast<std::size_t>(i)) = 1.0;
    layer.bias[k] = -static_cast<double>(k);
    readout[k] = detail::triangle_readout_coefficient(k);
  }
  return nn::ReluNetwork({std::move(layer)}, std::move(readout),
                         nn::BiasPlacement::inside_relu);
}

// The hard target family: manifold parameters, a parity subset over the
// truncated prefix, and the truncation t = floor(code_bits / 2).
struct HardTargetSpec {
  manifold::ManifoldSpec manifold_spec;
  ParitySubset subset;
  int truncation;

  HardTargetSpec(manifold::ManifoldSpec m, ParitySubset s)
      : manifold_spec(std::move(m)),
        subset(std::move(s)),
        truncation(manifold_spec.code_bits() / 2) {
    const int prefix_len = manifold_spec.code_bits() - truncation;
    if (subset.domain_dim() != prefix_len)
      throw std::domain_error("HardTargetSpec: subset domain must equal the prefix length");
    if (subset.empty()) throw std::domain_error("HardTargetSpec: hard targets need non-empty S");
  }

  int prefix_len() const { return manifold_spec.code_bits() - truncation; }
};

// Continuous parity composed with the coordinate selection P, folded into
// the first weight matrix so the target stays a single-hidden-layer
// network over ambient inputs. On manifold corners the output is the
// Boolean parity of the selected prefix bits; everywhere on the manifold
// it stays in [0,1].
inline nn::ReluNetwork hard_target(const HardTargetSpec& spec) {
  const auto& ms = spec.manifold_spec;
  const std::size_t width = spec.subset.size() + 1;
  nn::Layer layer;
  layer.weights = Matrix(width, ms.ambient_dim(), 0.0);
  layer.bias = Vec(width, 0.0);
  Vec readout(width, 0.0);
  const std::size_t block = static_cast<std::size_t>(ms.repeat_count());
  for (std::size_t k = 0; k < width; ++k) {
    for (int i : spec.subset.indices())
      layer.weights(k, static_cast<std::size_t>(i) * block) = 1.0;
    layer.bias[k] = -static_cast<double>(k);
    readout[k] = detail::triangle_readout_coefficient(k);
  }
  return nn::ReluNetwork({std::move(layer)}, std::move(readout),
                         nn::BiasPlacement::inside_relu);
}

// Evaluates the hard target through its definition (selection followed by
// the triangle wave), without the network realization. Used as the
// independent route in tests and exact experiments.
inline double hard_target_value(const HardTargetSpec& spec, const Vec& ambient) {
  const Vec prefix = manifold::project_prefix(ambient, spec.manifold_spec, spec.prefix_len());
  double acc = 0.0;
  for (int i : spec.subset.indices()) acc += prefix[static_cast<std::size_t>(i)];
  return triangle_wave(acc);
}

// Single-hidden-layer network with Gaussian weights of scale 1/sqrt(fan_in),
// entries clamped to [-weight_bound, weight_bound], readout rescaled so the
// empirical RMS output over a 100-input batch is one.
inline nn::NormalizedTarget random_target(std::size_t input_dim, std::size_t width,
                                          double weight_bound, const PointSampler& sampler,
                                          Rng& rng) {
  if (width < 1) throw std::domain_error("random_target: width must be >= 1");
  nn::ReluNetwork net = nn::random_network(input_dim, {width}, nn::BiasPlacement::after_relu, rng);
  for (auto& layer : net.layers()) {
    for (double& w : layer.weights.data())
      w = std::clamp(w, -weight_bound, weight_bound);
  }
  for (double& v : net.readout()) v = std::clamp(v, -weight_bound, weight_bound);
  return nn::normalize_target(net, sampler, 100, rng);
}

}  // namespace mlab::targets
