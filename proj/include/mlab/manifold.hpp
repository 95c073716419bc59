#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mlab/graycode.hpp"
#include "mlab/linalg.hpp"
#include "mlab/rng.hpp"
#include "mlab/sampling.hpp"

namespace mlab::manifold {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

// Parameters of one space-filling curve manifold. The curve lives in the
// first repeat_count*code_bits coordinates of the unit cube and visits the
// corners of a Gray code enumeration; every code bit is repeated
// repeat_count times so that each quarter-circle joint has radius
// sqrt(repeat_count)/2, which enforces the requested reach bound. For
// intrinsic dimension d > 1 the manifold is the product of the curve with
// the unit cube on the remaining d-1 coordinates.
class ManifoldSpec {
 public:
  ManifoldSpec(double reach_bound, int intrinsic_dim, int code_bits)
      : reach_bound_(reach_bound), intrinsic_dim_(intrinsic_dim), code_bits_(code_bits) {
    if (reach_bound <= 0.0) throw std::domain_error("ManifoldSpec: reach bound must be positive");
    if (intrinsic_dim < 1) throw std::domain_error("ManifoldSpec: intrinsic dim must be >= 1");
    if (code_bits < 2) throw std::domain_error("ManifoldSpec: code_bits must be >= 2");
    gray::check_width(code_bits);
    // ceil(4R^2) with a guard against representation noise when 4R^2 is an
    // exact integer.
    repeat_count_ = static_cast<int>(std::ceil(4.0 * reach_bound * reach_bound - 1e-9));
    if (repeat_count_ < 1) repeat_count_ = 1;
  }

  double reach_bound() const { return reach_bound_; }
  int intrinsic_dim() const { return intrinsic_dim_; }
  int code_bits() const { return code_bits_; }
  int repeat_count() const { return repeat_count_; }

  std::size_t curve_dim() const {
    return static_cast<std::size_t>(repeat_count_) * static_cast<std::size_t>(code_bits_);
  }
  std::size_t ambient_dim() const {
    return curve_dim() + static_cast<std::size_t>(intrinsic_dim_) - 1;
  }
  std::uint64_t segment_count() const { return std::uint64_t{1} << code_bits_; }

  // Quarter-circle radius of every joint: sqrt(repeat_count)/2. This is the
  // analytic reach of the constructed curve.
  double arc_radius() const { return std::sqrt(static_cast<double>(repeat_count_)) / 2.0; }

  // Expanded corner b_k as a 0/1 vector of curve_dim() coordinates.
  Vec corner(const gray::CodeIndex& k) const {
    const gray::BitString expanded =
        gray::expand_codeword(gray::gray(wrap(k)), repeat_count_, curve_dim());
    Vec v(curve_dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(expanded[i]);
    return v;
  }

  gray::CodeIndex wrap(const gray::CodeIndex& k) const {
    if (k.width() != code_bits_) throw std::invalid_argument("ManifoldSpec: index width mismatch");
    return k;
  }
  gray::CodeIndex index(std::int64_t raw) const { return gray::CodeIndex::wrapped(raw, code_bits_); }

 private:
  double reach_bound_;
  int intrinsic_dim_;
  int code_bits_;
  int repeat_count_;
};

// One point of the manifold, carrying its curve parameterization (segment
// index and angle), the cube factor coordinates, and the assembled ambient
// vector (curve part first, cube part last).
struct ManifoldPoint {
  std::uint64_t segment = 0;
  double angle = 0.0;
  Vec cube_coords;
  Vec ambient;
};

// Curve part of the point at angle t inside segment k:
//   (b_{k-1}+b_{k+1})/2 + ((b_k-b_{k+1})/2) cos t + ((b_k-b_{k-1})/2) sin t.
inline Vec segment_point(const ManifoldSpec& spec, const gray::CodeIndex& k, double t) {
  if (!(t >= 0.0 && t <= kHalfPi + 1e-12))
    throw std::domain_error("segment_point: angle outside [0, pi/2]");
  const Vec prev = spec.corner(k.neighbor(-1));
  const Vec cur = spec.corner(spec.wrap(k));
  const Vec next = spec.corner(k.neighbor(+1));
  const double c = std::cos(t);
  const double s = std::sin(t);
  Vec out(spec.curve_dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * (prev[i] + next[i]) + 0.5 * (cur[i] - next[i]) * c +
             0.5 * (cur[i] - prev[i]) * s;
  }
  return out;
}

inline Vec assemble_ambient(const ManifoldSpec& spec, const Vec& curve_part, const Vec& cube) {
  if (curve_part.size() != spec.curve_dim() ||
      cube.size() != static_cast<std::size_t>(spec.intrinsic_dim() - 1))
    throw std::invalid_argument("assemble_ambient: size mismatch");
  Vec ambient(curve_part);
  ambient.insert(ambient.end(), cube.begin(), cube.end());
  return ambient;
}

// Uniform draw with respect to arc length: every segment is a quarter
// circle of identical radius, so a uniform segment index plus a uniform
// angle is exactly uniform on the curve. Cube coordinates are i.i.d.
// uniform on [0,1].
inline ManifoldPoint sample_uniform(const ManifoldSpec& spec, Rng& rng) {
  ManifoldPoint p;
  p.segment = rng.uniform_index(spec.segment_count());
  p.angle = rng.uniform(0.0, kHalfPi);
  p.cube_coords.resize(static_cast<std::size_t>(spec.intrinsic_dim() - 1));
  for (double& c : p.cube_coords) c = rng.uniform();
  p.ambient = assemble_ambient(spec, segment_point(spec, spec.index(static_cast<std::int64_t>(p.segment)), p.angle),
                               p.cube_coords);
  return p;
}

inline PointSampler make_sampler(const ManifoldSpec& spec) {
  return [spec](Rng& rng) { return sample_uniform(spec, rng).ambient; };
}

// Coordinate-wise rounding to the nearest cube corner, (sgn(x-1/2)+1)/2.
// Ties at exactly 0.5 round up so exhaustive tests see one deterministic
// corner per input.
inline gray::BitString round_to_corner(const Vec& x) {
  std::vector<std::uint8_t> bits(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) bits[i] = (x[i] >= 0.5) ? 1 : 0;
  return gray::BitString(std::move(bits));
}

// The selection operator P: one representative coordinate per repeated
// block (the block leader), truncated to prefix_len entries.
inline Vec project_prefix(const Vec& x, const ManifoldSpec& spec, int prefix_len) {
  if (prefix_len < 1 || prefix_len > spec.code_bits())
    throw std::domain_error("project_prefix: prefix length out of range");
  if (x.size() < spec.curve_dim()) throw std::invalid_argument("project_prefix: input too short");
  Vec out(static_cast<std::size_t>(prefix_len));
  for (int i = 0; i < prefix_len; ++i)
    out[static_cast<std::size_t>(i)] =
        x[static_cast<std::size_t>(i) * static_cast<std::size_t>(spec.repeat_count())];
  return out;
}

inline bool is_boolean(const Vec& v) {
  for (double x : v) {
    if (x != 0.0 && x != 1.0) return false;
  }
  return true;
}

// MSB-first position of the single bit flipped between code words i and
// i+1 (cyclically).
inline int transition_flip_position(std::uint64_t i, int k) {
  const std::uint64_t period = std::uint64_t{1} << k;
  const std::uint64_t a = i ^ (i >> 1);
  const std::uint64_t next = (i + 1) & (period - 1);
  const std::uint64_t b = next ^ (next >> 1);
  std::uint64_t diff = a ^ b;
  if (diff == 0 || (diff & (diff - 1)) != 0)
    throw std::logic_error("transition_flip_position: not a single-bit transition");
  int lsb = 0;
  while (((diff >> lsb) & 1u) == 0) ++lsb;
  return k - 1 - lsb;
}

// Exhaustive census of the first (code_bits - truncation) block leaders
// over all segments. A segment is "clean" when neither of its two adjacent
// code transitions touches the prefix, in which case the prefix is the
// constant Boolean word given by the leading bits of gray(k) for every
// interior angle. Non-clean segments contribute Boolean prefixes only on a
// measure-zero set of angles.
struct PrefixCensus {
  double frac_boolean = 0.0;    // probability the prefix is a Boolean word
  double frac_collision = 0.0;  // probability two independent prefixes coincide
  std::vector<std::optional<std::uint64_t>> segment_prefix;  // per segment, if clean
};

inline PrefixCensus enumerate_prefix_census(const ManifoldSpec& spec, int truncation) {
  const int nb = spec.code_bits();
  if (truncation < 1 || truncation >= nb)
    throw std::domain_error("enumerate_prefix_census: truncation out of range");
  if (nb > 22) throw std::domain_error("enumerate_prefix_census: code too wide to enumerate");
  const int m = nb - truncation;
  const std::uint64_t n_seg = spec.segment_count();

  PrefixCensus census;
  census.segment_prefix.resize(n_seg);
  std::vector<std::uint64_t> prefix_multiplicity(std::uint64_t{1} << m, 0);
  std::uint64_t clean = 0;
  for (std::uint64_t k = 0; k < n_seg; ++k) {
    const std::uint64_t prev = (k + n_seg - 1) & (n_seg - 1);
    const bool prefix_touched = transition_flip_position(prev, nb) < m ||
                                transition_flip_position(k, nb) < m;
    if (prefix_touched) continue;
    const std::uint64_t word = k ^ (k >> 1);
    const std::uint64_t prefix = word >> truncation;
    census.segment_prefix[k] = prefix;
    ++prefix_multiplicity[prefix];
    ++clean;
  }
  census.frac_boolean = static_cast<double>(clean) / static_cast<double>(n_seg);
  double collision = 0.0;
  for (std::uint64_t c : prefix_multiplicity) {
    const double q = static_cast<double>(c) / static_cast<double>(n_seg);
    collision += q * q;
  }
  census.frac_collision = collision;
  return census;
}

struct PrefixStats {
  double frac_boolean = 0.0;
  double frac_collision = 0.0;
  std::size_t trials = 0;
};

// Monte Carlo counterpart of enumerate_prefix_census: draws pairs of
// independent manifold samples and tests the truncated prefix for
// Booleanity and collision. Boolean coordinates come out of segment_point
// as exact 0.0/1.0, so the comparisons are exact.
inline PrefixStats boolean_prefix_stats(const ManifoldSpec& spec, int truncation,
                                        std::size_t trials, Rng& rng) {
  const int nb = spec.code_bits();
  if (truncation < 1 || truncation >= nb)
    throw std::domain_error("boolean_prefix_stats: truncation out of range");
  if (trials < 1000) throw std::domain_error("boolean_prefix_stats: need at least 10^3 trials");
  const int m = nb - truncation;
  std::size_t boolean_hits = 0;
  std::size_t collisions = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const Vec a = project_prefix(sample_uniform(spec, rng).ambient, spec, m);
    const Vec b = project_prefix(sample_uniform(spec, rng).ambient, spec, m);
    if (is_boolean(a)) ++boolean_hits;
    if (a == b) ++collisions;
  }
  PrefixStats stats;
  stats.trials = trials;
  stats.frac_boolean = static_cast<double>(boolean_hits) / static_cast<double>(trials);
  stats.frac_collision = static_cast<double>(collisions) / static_cast<double>(trials);
  return stats;
}

// Nearest point on the manifold. Each segment is an arc c + A cos t + B sin t
// with A perpendicular to B and |A| = |B| = arc radius, so the per-segment
// projection is a clamped angle; the winner over all segments is exact. The
// cube factor projects by coordinate clamping.
inline ManifoldPoint project_to_manifold(const ManifoldSpec& spec, const Vec& x) {
  if (x.size() != spec.ambient_dim())
    throw std::invalid_argument("project_to_manifold: dimension mismatch");
  const std::uint64_t n_seg = spec.segment_count();
  if (spec.code_bits() > 14)
    throw std::domain_error("project_to_manifold: code too wide for exhaustive segment scan");

  ManifoldPoint best;
  double best_dist2 = -1.0;
  const Vec curve_slice(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(spec.curve_dim()));
  for (std::uint64_t k = 0; k < n_seg; ++k) {
    const auto ki = spec.index(static_cast<std::int64_t>(k));
    const Vec prev = spec.corner(ki.neighbor(-1));
    const Vec cur = spec.corner(ki);
    const Vec next = spec.corner(ki.neighbor(+1));
    double va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < curve_slice.size(); ++i) {
      const double center = 0.5 * (prev[i] + next[i]);
      const double v = curve_slice[i] - center;
      va += v * 0.5 * (cur[i] - next[i]);
      vb += v * 0.5 * (cur[i] - prev[i]);
    }
    double t = std::atan2(vb, va);
    if (t < 0.0) t = 0.0;
    if (t > kHalfPi) t = kHalfPi;
    for (double cand : {t, 0.0, kHalfPi}) {
      const Vec p = segment_point(spec, ki, cand);
      const double d2 = distance2(p, curve_slice);
      if (best_dist2 < 0.0 || d2 < best_dist2) {
        best_dist2 = d2;
        best.segment = k;
        best.angle = cand;
      }
    }
  }
  best.cube_coords.assign(x.begin() + static_cast<std::ptrdiff_t>(spec.curve_dim()), x.end());
  for (double& c : best.cube_coords) c = std::min(1.0, std::max(0.0, c));
  best.ambient = assemble_ambient(
      spec, segment_point(spec, spec.index(static_cast<std::int64_t>(best.segment)), best.angle),
      best.cube_coords);
  return best;
}

// A manifold sample together with a basis of its tangent space.
struct TangentSample {
  Vec point;
  std::vector<Vec> tangent_basis;
};

using TangentSampler = std::function<TangentSample(Rng&)>;

// Point-pair reach surrogate: reach(S) = inf over p != q of
// |q-p|^2 / (2 dist(q-p, T_p)), so sampling pairs yields a value that is
// never below the true reach (up to numerical noise) and approaches it when
// the sampled pairs include near-critical configurations. Pairs that are
// degenerate (coincident, or with no normal deviation) are skipped.
inline double empirical_reach_probe(const TangentSampler& sampler, std::size_t pair_samples,
                                    Rng& rng) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < pair_samples; ++it) {
    TangentSample a = sampler(rng);
    const TangentSample b = sampler(rng);
    Vec diff(b.point.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = b.point[i] - a.point[i];
    const double dist2 = norm2(diff);
    if (dist2 < 1e-18) continue;

    // Orthonormalize the tangent basis, then remove the tangential part.
    std::vector<Vec>& basis = a.tangent_basis;
    std::vector<Vec> ortho;
    for (Vec v : basis) {
      for (const Vec& e : ortho) axpy(-dot(e, v), e, v);
      const double len = norm(v);
      if (len > 1e-12) {
        for (double& c : v) c /= len;
        ortho.push_back(std::move(v));
      }
    }
    Vec residual = diff;
    for (const Vec& e : ortho) axpy(-dot(e, residual), e, residual);
    const double deviation = norm(residual);
    if (deviation < 1e-12) continue;
    best = std::min(best, dist2 / (2.0 * deviation));
  }
  if (!std::isfinite(best)) throw std::runtime_error("empirical_reach_probe: no usable pairs");
  return best;
}

// Tangent-space sampler for the constructed manifold: the curve tangent is
// the analytic arc derivative, and the cube factor contributes the last
// d-1 coordinate directions.
inline TangentSampler make_tangent_sampler(const ManifoldSpec& spec) {
  if (spec.code_bits() > 10)
    throw std::domain_error("make_tangent_sampler: probe limited to code_bits <= 10");
  return [spec](Rng& rng) {
    const ManifoldPoint p = sample_uniform(spec, rng);
    const auto ki = spec.index(static_cast<std::int64_t>(p.segment));
    const Vec prev = spec.corner(ki.neighbor(-1));
    const Vec cur = spec.corner(ki);
    const Vec next = spec.corner(ki.neighbor(+1));
    const double c = std::cos(p.angle);
    const double s = std::sin(p.angle);
    Vec tangent(spec.ambient_dim(), 0.0);
    for (std::size_t i = 0; i < spec.curve_dim(); ++i)
      tangent[i] = -0.5 * (cur[i] - next[i]) * s + 0.5 * (cur[i] - prev[i]) * c;
    TangentSample out;
    out.point = p.ambient;
    out.tangent_basis.push_back(std::move(tangent));
    for (int j = 0; j < spec.intrinsic_dim() - 1; ++j) {
      Vec e(spec.ambient_dim(), 0.0);
      e[spec.curve_dim() + static_cast<std::size_t>(j)] = 1.0;
      out.tangent_basis.push_back(std::move(e));
    }
    return out;
  };
}

inline double reach_probe(const ManifoldSpec& spec, std::size_t pair_samples, Rng& rng) {
  return empirical_reach_probe(make_tangent_sampler(spec), pair_samples, rng);
}

// Unit sphere supported on a dim-dimensional linear subspace of the ambient
// space; samples are basis * u with u uniform on the unit sphere of R^dim.
class HypersphereSpec {
 public:
  HypersphereSpec(int subspace_dim, int ambient_dim, Matrix basis)
      : subspace_dim_(subspace_dim), ambient_dim_(ambient_dim), basis_(std::move(basis)) {
    if (subspace_dim < 1 || ambient_dim < subspace_dim)
      throw std::domain_error("HypersphereSpec: need 1 <= subspace_dim <= ambient_dim");
    if (basis_.rows() != static_cast<std::size_t>(ambient_dim) ||
        basis_.cols() != static_cast<std::size_t>(subspace_dim))
      throw std::invalid_argument("HypersphereSpec: basis shape mismatch");
    check_orthonormal();
  }

  // Random orthonormal basis from a Gaussian draw.
  static HypersphereSpec random(int subspace_dim, int ambient_dim, Rng& rng) {
    Matrix basis(static_cast<std::size_t>(ambient_dim), static_cast<std::size_t>(subspace_dim));
    for (std::size_t i = 0; i < basis.rows(); ++i)
      for (std::size_t j = 0; j < basis.cols(); ++j) basis(i, j) = rng.normal();
    orthonormalize_columns(basis);
    return HypersphereSpec(subspace_dim, ambient_dim, std::move(basis));
  }

  // Axis-aligned basis on the first subspace_dim coordinates.
  static HypersphereSpec axis_aligned(int subspace_dim, int ambient_dim) {
    Matrix basis(static_cast<std::size_t>(ambient_dim), static_cast<std::size_t>(subspace_dim));
    for (int j = 0; j < subspace_dim; ++j) basis(static_cast<std::size_t>(j), static_cast<std::size_t>(j)) = 1.0;
    return HypersphereSpec(subspace_dim, ambient_dim, std::move(basis));
  }

  int subspace_dim() const { return subspace_dim_; }
  int ambient_dim() const { return ambient_dim_; }
  const Matrix& basis() const { return basis_; }

  Vec sample(Rng& rng) const {
    Vec u(static_cast<std::size_t>(subspace_dim_));
    double len = 0.0;
    do {
      for (double& c : u) c = rng.normal();
      len = norm(u);
    } while (len < 1e-12);
    for (double& c : u) c /= len;
    return basis_.apply(u);
  }

  // Exact nearest point on the sphere: project into the subspace, then
  // normalize within it.
  Vec project(const Vec& x) const {
    Vec u = basis_.apply_transposed(x);
    const double len = norm(u);
    if (len < 1e-12) throw std::runtime_error("HypersphereSpec::project: ill-posed projection");
    for (double& c : u) c /= len;
    return basis_.apply(u);
  }

 private:
  void check_orthonormal() const {
    for (std::size_t a = 0; a < basis_.cols(); ++a) {
      for (std::size_t b = a; b < basis_.cols(); ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < basis_.rows(); ++i) s += basis_(i, a) * basis_(i, b);
        const double want = (a == b) ? 1.0 : 0.0;
        if (std::abs(s - want) > 1e-10)
          throw std::invalid_argument("HypersphereSpec: basis not orthonormal");
      }
    }
  }

  int subspace_dim_;
  int ambient_dim_;
  Matrix basis_;
};

inline std::vector<Vec> sample_hypersphere(const HypersphereSpec& spec, std::size_t count,
                                           Rng& rng) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(spec.sample(rng));
  return out;
}

inline PointSampler make_sampler(const HypersphereSpec& spec) {
  return [spec](Rng& rng) { return spec.sample(rng); };
}

}  // namespace mlab::manifold
