#pragma once

#include <functional>
#include <utility>

#include "mlab/linalg.hpp"
#include "mlab/rng.hpp"

namespace mlab {

// The unit of every dataset: an ambient input vector and its scalar label.
struct LabeledSample {
  Vec x;
  double y = 0.0;
};

using PointSampler = std::function<Vec(Rng&)>;
using LabeledSampler = std::function<LabeledSample(Rng&)>;
using ScalarFn = std::function<double(const Vec&)>;

// Attaches labels from a target function to a point sampler.
inline LabeledSampler labeled(PointSampler points, ScalarFn target) {
  return [points = std::move(points), target = std::move(target)](Rng& rng) {
    LabeledSample s;
    s.x = points(rng);
    s.y = target(s.x);
    return s;
  };
}

}  // namespace mlab
