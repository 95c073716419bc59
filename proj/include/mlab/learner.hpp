#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "mlab/geometry.hpp"
#include "mlab/nn.hpp"
#include "mlab/sampling.hpp"

namespace mlab::learner {

// Nearest-anchor interpolator: a certified epsilon-net whose anchors carry
// true target labels, plus the Lipschitz bound that converts net radius
// into prediction error.
struct InterpolationModel {
  geom::EpsilonNet net;
  double lipschitz_bound = 0.0;
  double target_error = 0.0;    // requested eps_out
  double fallback_value = 0.0;  // value assumed for uncovered mass in error accounting

  bool certified() const { return net.certification.certified; }
  double radius() const { return net.epsilon; }
};

// Builds a certified (eps', delta)-net with eps' = eps_out / L, L being the
// directly computed Frobenius product bound of the target, then labels
// anchors with the true target. Certification failure is propagated as an
// uncertified model, not an error.
inline InterpolationModel fit_interpolator(const nn::ReluNetwork& target,
                                           const PointSampler& sampler, double eps_out,
                                           double delta, std::size_t max_samples, Rng& rng) {
  if (eps_out <= 0.0) throw std::domain_error("fit_interpolator: eps_out must be positive");
  InterpolationModel model;
  model.lipschitz_bound = nn::lipschitz_bound(target);
  model.target_error = eps_out;
  const double eps_prime = eps_out / std::max(model.lipschitz_bound, 1e-12);
  LabeledSampler labeled_sampler = labeled(sampler, [&target](const Vec& x) {
    return target.forward(x);
  });
  model.net = geom::build_net(labeled_sampler, eps_prime, delta, max_samples, rng);
  return model;
}

struct Prediction {
  double value = 0.0;
  bool covered = false;
  double anchor_distance = 0.0;
};

// Label of the nearest anchor. Queries beyond the net radius still return
// the nearest label but come back flagged uncovered; they are the
// delta-fraction the certification accounts for.
inline Prediction predict(const InterpolationModel& model, const Vec& x) {
  const auto nearest = geom::nearest_anchor(model.net, x);
  Prediction p;
  p.value = model.net.anchors[nearest.index].y;
  p.anchor_distance = nearest.distance;
  p.covered = nearest.distance <= model.net.epsilon;
  return p;
}

struct EvaluationReport {
  double mse = 0.0;
  double covered_mse = 0.0;
  double uncovered_fraction = 0.0;
  std::size_t samples = 0;
};

inline EvaluationReport evaluate(const InterpolationModel& model, const nn::ReluNetwork& target,
                                 const PointSampler& sampler, std::size_t samples, Rng& rng) {
  EvaluationReport report;
  report.samples = samples;
  std::size_t covered = 0;
  double covered_sq = 0.0;
  double total_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec x = sampler(rng);
    const auto p = predict(model, x);
    const double err = p.value - target.forward(x);
    total_sq += err * err;
    if (p.covered) {
      ++covered;
      covered_sq += err * err;
    }
  }
  report.mse = total_sq / static_cast<double>(samples);
  report.covered_mse = covered ? covered_sq / static_cast<double>(covered) : 0.0;
  report.uncovered_fraction =
      static_cast<double>(samples - covered) / static_cast<double>(samples);
  return report;
}

}  // namespace mlab::learner
