#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mlab/linalg.hpp"
#include "mlab/rng.hpp"
#include "mlab/sampling.hpp"

namespace mlab::geom {

// One-sided Clopper-Pearson upper confidence bound for a binomial
// proportion: the smallest p with P[Bin(trials, p) <= successes] <= alpha.
inline double binomial_upper_bound(std::size_t successes, std::size_t trials,
                                   double alpha = 0.05) {
  if (trials == 0) throw std::domain_error("binomial_upper_bound: no trials");
  if (successes >= trials) return 1.0;
  const auto cdf = [&](double p) {
    // P[X <= successes] via stable log-space summation.
    double log_terms_max = -std::numeric_limits<double>::infinity();
    std::vector<double> log_terms(successes + 1);
    double lchoose = 0.0;  // log C(trials, 0)
    for (std::size_t k = 0; k <= successes; ++k) {
      if (k > 0) lchoose += std::log(static_cast<double>(trials - k + 1)) -
                            std::log(static_cast<double>(k));
      log_terms[k] = lchoose + static_cast<double>(k) * std::log(p) +
                     static_cast<double>(trials - k) * std::log1p(-p);
      log_terms_max = std::max(log_terms_max, log_terms[k]);
    }
    double s = 0.0;
    for (double lt : log_terms) s += std::exp(lt - log_terms_max);
    return std::exp(log_terms_max) * s;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0 || mid >= 1.0) break;
    if (cdf(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

struct NetCertification {
  std::size_t trials = 0;
  std::size_t misses = 0;
  double miss_upper_bound = 1.0;  // one-sided 95% bound at certification time
  bool certified = false;
  std::size_t total_draws = 0;  // sampler budget consumed (growth + checks)
};

// A finite set of labeled anchor points with radius epsilon and an
// empirically certified coverage deficit delta: a fresh draw lands within
// epsilon of some anchor with probability at least 1 - delta, certified by
// a held-out binomial check.
struct EpsilonNet {
  std::vector<LabeledSample> anchors;
  double epsilon = 0.0;
  double delta = 0.0;
  NetCertification certification;
};

struct NearestAnchor {
  std::size_t index = 0;
  double distance = 0.0;
};

// Exact nearest anchor by linear scan; ties break toward the lowest index.
// Linear scan is adequate below ~1e5 anchors; a spatial index is the
// obvious extension point beyond that.
inline NearestAnchor nearest_anchor(const EpsilonNet& net, const Vec& x) {
  if (net.anchors.empty()) throw std::domain_error("nearest_anchor: empty net");
  NearestAnchor best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < net.anchors.size(); ++i) {
    const double d = distance2(net.anchors[i].x, x);
    if (d < best.distance) {
      best.index = i;
      best.distance = d;
    }
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

namespace detail {
inline bool within_of_any(const std::vector<LabeledSample>& anchors, const Vec& x,
                          double radius) {
  const double r2 = radius * radius;
  for (const auto& a : anchors) {
    if (distance2(a.x, x) <= r2) return true;
  }
  return false;
}
}  // namespace detail

// Draws i.i.d. labeled samples and keeps those farther than epsilon/2 from
// every existing anchor. After each growth phase a held-out check draws
// fresh samples and certifies the net once the one-sided 95% binomial
// bound on the miss rate drops to delta. If the budget runs out first the
// net is returned with certified = false; this is an explicit status, not
// an error.
inline EpsilonNet build_net(const LabeledSampler& sampler, double epsilon, double delta,
                            std::size_t max_samples, Rng& rng) {
  if (epsilon <= 0.0) throw std::domain_error("build_net: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("build_net: delta must be in (0,1)");

  EpsilonNet net;
  net.epsilon = epsilon;
  net.delta = delta;
  const std::size_t check_trials =
      std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(5.0 / delta)));
  std::size_t draws = 0;

  while (true) {
    // Growth phase.
    const std::size_t grow = std::max<std::size_t>(32, net.anchors.size() / 2);
    for (std::size_t i = 0; i < grow && draws < max_samples; ++i) {
      LabeledSample s = sampler(rng);
      ++draws;
      if (!detail::within_of_any(net.anchors, s.x, epsilon / 2.0))
        net.anchors.push_back(std::move(s));
    }

    // Held-out certification check on fresh samples.
    if (draws + check_trials > max_samples) break;
    std::size_t misses = 0;
    for (std::size_t i = 0; i < check_trials; ++i) {
      const LabeledSample s = sampler(rng);
      if (!detail::within_of_any(net.anchors, s.x, epsilon)) ++misses;
    }
    draws += check_trials;
    const double ub = binomial_upper_bound(misses, check_trials);
    if (ub <= delta) {
      net.certification = {check_trials, misses, ub, true, draws};
      return net;
    }
    if (draws >= max_samples) break;
  }
  net.certification.certified = false;
  net.certification.total_draws = draws;
  return net;
}

// Re-runs the held-out miss check with an independent generator; used to
// validate a certification record out of sample.
inline double measure_miss_rate(const EpsilonNet& net, const LabeledSampler& sampler,
                                std::size_t trials, Rng& rng) {
  std::size_t misses = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const LabeledSample s = sampler(rng);
    if (!detail::within_of_any(net.anchors, s.x, net.epsilon)) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(trials);
}

// Greedy cover: scan in index order, opening a new center whenever a point
// is farther than epsilon from every open center. Valid by construction,
// within the usual greedy factor of optimal.
inline std::vector<std::size_t> greedy_cover(const std::vector<Vec>& points, double epsilon) {
  std::vector<std::size_t> centers;
  const double r2 = epsilon * epsilon;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool covered = false;
    for (std::size_t c : centers) {
      if (distance2(points[c], points[i]) <= r2) {
        covered = true;
        break;
      }
    }
    if (!covered) centers.push_back(i);
  }
  return centers;
}

// Greedy packing: accept a point when it is strictly farther than
// 2*epsilon from every accepted point, so the epsilon-balls around the
// accepted centers are pairwise disjoint. Index order breaks ties.
inline std::vector<std::size_t> greedy_packing(const std::vector<Vec>& points, double epsilon) {
  std::vector<std::size_t> centers;
  const double r2 = 4.0 * epsilon * epsilon;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool separated = true;
    for (std::size_t c : centers) {
      if (distance2(points[c], points[i]) <= r2) {
        separated = false;
        break;
      }
    }
    if (separated) centers.push_back(i);
  }
  return centers;
}

// Records the packing/covering duality triple at scale epsilon:
//   pk(2e) <= cv(2e) <= pk(e).
struct CoverReport {
  double epsilon = 0.0;
  std::size_t cover_size = 0;          // cv(2e)
  std::size_t packing_size = 0;        // pk(e)
  std::size_t packing_size_coarse = 0; // pk(2e)

  bool duality_holds() const {
    return packing_size_coarse <= cover_size && cover_size <= packing_size;
  }
};

inline CoverReport duality_report(const std::vector<Vec>& points, double epsilon) {
  CoverReport report;
  report.epsilon = epsilon;
  report.cover_size = greedy_cover(points, 2.0 * epsilon).size();
  report.packing_size = greedy_packing(points, epsilon).size();
  report.packing_size_coarse = greedy_packing(points, 2.0 * epsilon).size();
  return report;
}

struct CouponCollectorReport {
  double mean_stop_time = 0.0;
  std::vector<std::size_t> stop_times;  // sorted; empirical CDF support

  double empirical_cdf(double x) const {
    const auto it = std::upper_bound(stop_times.begin(), stop_times.end(),
                                     static_cast<std::size_t>(x));
    return static_cast<double>(it - stop_times.begin()) /
           static_cast<double>(stop_times.size());
  }
};

// Simulates uniform draws over n bins until every bin is hit, repeated
// `trials` times. The exact mean is n * H_n.
inline CouponCollectorReport coupon_collector_sim(std::size_t n, std::size_t trials, Rng& rng) {
  if (n < 1) throw std::domain_error("coupon_collector_sim: need n >= 1");
  if (trials < 100) throw std::domain_error("coupon_collector_sim: need at least 100 trials");
  CouponCollectorReport report;
  report.stop_times.reserve(trials);
  std::vector<std::uint8_t> seen(n);
  double total = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::fill(seen.begin(), seen.end(), 0);
    std::size_t remaining = n;
    std::size_t steps = 0;
    while (remaining > 0) {
      const std::uint64_t bin = rng.uniform_index(n);
      ++steps;
      if (!seen[bin]) {
        seen[bin] = 1;
        --remaining;
      }
    }
    report.stop_times.push_back(steps);
    total += static_cast<double>(steps);
  }
  std::sort(report.stop_times.begin(), report.stop_times.end());
  report.mean_stop_time = total / static_cast<double>(trials);
  return report;
}

inline double harmonic_number(std::size_t n) {
  double h = 0.0;
  for (std::size_t k = 1; k <= n; ++k) h += 1.0 / static_cast<double>(k);
  return h;
}

}  // namespace mlab::geom
