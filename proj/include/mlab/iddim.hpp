#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlab/linalg.hpp"
#include "mlab/rng.hpp"

namespace mlab::iddim {

using ProjectionFn = std::function<Vec(const Vec&)>;

// Local cloud of difference vectors around a center point: perturb, project
// back to the manifold, subtract.
struct NeighborhoodMatrix {
  Vec center;
  Matrix columns;  // ambient x N
  double noise_scale = 0.0;
  std::size_t skipped = 0;  // perturbations whose projection failed
};

// Samples `count` projected perturbations of p with isotropic Gaussian
// noise of scale sigma. Projection failures are skipped and counted; the
// draw loop gives up after 2x the requested budget.
inline NeighborhoodMatrix local_neighborhood(const ProjectionFn& project, const Vec& p,
                                             double sigma, std::size_t count, Rng& rng) {
  if (count < p.size())
    throw std::domain_error("local_neighborhood: need at least ambient-many samples");
  NeighborhoodMatrix nbhd;
  nbhd.center = p;
  nbhd.noise_scale = sigma;
  nbhd.columns = Matrix(p.size(), count);
  std::size_t filled = 0;
  std::size_t attempts = 0;
  while (filled < count && attempts < 2 * count) {
    ++attempts;
    Vec noisy = p;
    for (double& c : noisy) c += rng.normal(0.0, sigma);
    Vec projected;
    try {
      projected = project(noisy);
    } catch (const std::exception&) {
      ++nbhd.skipped;
      continue;
    }
    for (std::size_t i = 0; i < p.size(); ++i)
      nbhd.columns(i, filled) = projected[i] - p[i];
    ++filled;
  }
  if (filled < count) throw std::runtime_error("local_neighborhood: too many projection failures");
  return nbhd;
}

// Difference vectors from a point cloud: the k nearest neighbors of the
// chosen center. The projection-free variant for externally supplied data.
inline NeighborhoodMatrix knn_neighborhood(const std::vector<Vec>& cloud,
                                           std::size_t center_index, std::size_t k) {
  if (center_index >= cloud.size()) throw std::domain_error("knn_neighborhood: bad center");
  if (k < 1 || k >= cloud.size()) throw std::domain_error("knn_neighborhood: bad k");
  const Vec& center = cloud[center_index];
  std::vector<std::pair<double, std::size_t>> by_distance;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (i == center_index) continue;
    by_distance.push_back({distance2(cloud[i], center), i});
  }
  std::sort(by_distance.begin(), by_distance.end());
  NeighborhoodMatrix nbhd;
  nbhd.center = center;
  nbhd.columns = Matrix(center.size(), k);
  for (std::size_t j = 0; j < k; ++j) {
    const Vec& q = cloud[by_distance[j].second];
    for (std::size_t i = 0; i < center.size(); ++i) nbhd.columns(i, j) = q[i] - center[i];
  }
  return nbhd;
}

// Frobenius norm squared over top singular value squared.
inline double stable_rank(const Matrix& m) {
  const double fro2 = m.frobenius_norm() * m.frobenius_norm();
  if (fro2 <= 0.0) throw std::domain_error("stable_rank: zero matrix");
  const auto sv = singular_values(m);
  return fro2 / (sv.front() * sv.front());
}

inline double stable_rank_of_spectrum(const std::vector<double>& sv) {
  if (sv.empty() || sv.front() <= 0.0)
    throw std::domain_error("stable_rank_of_spectrum: degenerate spectrum");
  double acc = 0.0;
  for (double s : sv) acc += (s / sv.front()) * (s / sv.front());
  return acc;
}

// Two readings of the spectrum. `direct` treats the columns as spanning
// the tangent space (the difference-vector pipeline used here): the kept
// singular values count tangent directions. `shifted` works on
// s_max - s_i, the reading for spectra whose columns span the normal
// space; it is kept behind this flag because the source formulation is
// ambiguous for rectangular matrices.
enum class SpectrumReading { direct, shifted };

struct EstimatorConfig {
  double relative_threshold = 0.3;  // drop singular values below this fraction of the top
  SpectrumReading reading = SpectrumReading::direct;
};

struct DimensionEstimate {
  double raw = 0.0;
  int rounded = 0;
  std::vector<double> spectrum;
  int spectral_gap_index = 0;  // secondary estimator: largest-gap position
  std::string method;
};

// Centers the difference columns, takes their singular spectrum, and
// reports the truncated stable rank (primary) plus the largest-gap index
// (secondary).
inline DimensionEstimate estimate_intrinsic_dim(const NeighborhoodMatrix& nbhd,
                                                const EstimatorConfig& config = {}) {
  const std::size_t rows = nbhd.columns.rows();
  const std::size_t cols = nbhd.columns.cols();
  Matrix centered = nbhd.columns;
  for (std::size_t i = 0; i < rows; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += centered(i, j);
    mu /= static_cast<double>(cols);
    for (std::size_t j = 0; j < cols; ++j) centered(i, j) -= mu;
  }

  DimensionEstimate est;
  est.spectrum = singular_values(centered);
  const double top = est.spectrum.front();
  if (top <= 0.0) throw std::domain_error("estimate_intrinsic_dim: degenerate neighborhood");

  if (config.reading == SpectrumReading::direct) {
    std::vector<double> kept;
    for (double s : est.spectrum)
      if (s >= config.relative_threshold * top) kept.push_back(s);
    est.raw = stable_rank_of_spectrum(kept);
    est.method = "stable_rank_truncated";
  } else {
    std::vector<double> shifted;
    for (double s : est.spectrum) shifted.push_back(top - s);
    std::sort(shifted.begin(), shifted.end(), std::greater<double>());
    const double normal_count =
        (shifted.front() > 0.0) ? stable_rank_of_spectrum(shifted) : 0.0;
    est.raw = static_cast<double>(est.spectrum.size()) - normal_count;
    est.method = "stable_rank_shifted";
  }
  est.rounded = static_cast<int>(std::lround(est.raw));

  double best_gap = -1.0;
  for (std::size_t i = 0; i + 1 < est.spectrum.size(); ++i) {
    const double gap = est.spectrum[i] - est.spectrum[i + 1];
    if (gap > best_gap) {
      best_gap = gap;
      est.spectral_gap_index = static_cast<int>(i) + 1;
    }
  }
  return est;
}

}  // namespace mlab::iddim
