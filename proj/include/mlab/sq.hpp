#pragma once

#include <array>
#include <memory>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlab/manifold.hpp"
#include "mlab/rng.hpp"
#include "mlab/sampling.hpp"
#include "mlab/targets.hpp"

namespace mlab::sq {

using QueryFn = std::function<double(const Vec&, double)>;

// A finite function class together with its input distribution. When the
// class admits exact expectation machinery (small Boolean cubes, or the
// space-filling curve with per-segment quadrature), the optional callbacks
// are populated and the oracle's adversarial policy becomes deterministic.
struct FunctionClass {
  std::size_t size = 0;
  std::function<double(std::size_t, const Vec&)> value;  // f_i(x)
  std::function<Vec(Rng&)> sample_input;

  // E_x[g(x, f_i(x))] for every member i, exact / quadrature. Null when
  // only Monte Carlo estimation is available.
  std::function<std::vector<double>(const QueryFn&)> member_means;

  // Exact pairwise-independence deficit. Null when unavailable.
  std::function<double()> exact_eta;
};

namespace detail {

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 10> kGlNodes = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
    -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
    0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
    0.9739065285171717};
inline constexpr std::array<double, 10> kGlWeights = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
    0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
    0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
    0.0666713443086881};

inline int popcount_parity(std::uint64_t v) {
  int acc = 0;
  while (v) {
    acc ^= 1;
    v &= v - 1;
  }
  return acc;
}

}  // namespace detail

// The class of all 2^dim parity functions over uniform Boolean inputs
// (empty subset included; pairwise independence needs the full linear
// span). Exact machinery enumerates the cube, so dim is capped at 10.
inline FunctionClass boolean_parity_class(int dim) {
  if (dim < 1 || dim > 20) throw std::domain_error("boolean_parity_class: dim out of range");
  FunctionClass cls;
  const std::uint64_t n_members = std::uint64_t{1} << dim;
  const std::uint64_t n_inputs = std::uint64_t{1} << dim;
  cls.size = n_members;
  cls.value = [dim](std::size_t member, const Vec& x) {
    if (static_cast<int>(x.size()) != dim)
      throw std::invalid_argument("parity class: input width mismatch");
    std::uint64_t x_mask = 0;
    for (int j = 0; j < dim; ++j)
      if (x[static_cast<std::size_t>(j)] != 0.0) x_mask |= std::uint64_t{1} << j;
    return static_cast<double>(detail::popcount_parity(member & x_mask));
  };
  cls.sample_input = [dim](Rng& rng) {
    Vec x(static_cast<std::size_t>(dim));
    for (double& c : x) c = (rng.uniform() < 0.5) ? 0.0 : 1.0;
    return x;
  };
  if (dim <= 10) {
    cls.member_means = [dim, n_members, n_inputs](const QueryFn& g) {
      std::vector<double> means(n_members, 0.0);
      const double w = 1.0 / static_cast<double>(n_inputs);
      Vec x(static_cast<std::size_t>(dim));
      for (std::uint64_t x_mask = 0; x_mask < n_inputs; ++x_mask) {
        for (int j = 0; j < dim; ++j)
          x[static_cast<std::size_t>(j)] = ((x_mask >> j) & 1u) ? 1.0 : 0.0;
        const double g0 = g(x, 0.0);
        const double g1 = g(x, 1.0);
        if (std::abs(g0) > 1.0 + 1e-12 || std::abs(g1) > 1.0 + 1e-12)
          throw std::domain_error("sq query: output outside [-1, 1]");
        for (std::uint64_t member = 0; member < n_members; ++member)
          means[member] += w * (detail::popcount_parity(member & x_mask) ? g1 : g0);
      }
      return means;
    };
    cls.exact_eta = [dim, n_members, n_inputs]() {
      // Honest pair enumeration: for each input pair, tally the joint law
      // of (f(x), f(x')) over the whole class and test for the uniform
      // product over {0,1}.
      std::uint64_t good = 0;
      for (std::uint64_t a = 0; a < n_inputs; ++a) {
        for (std::uint64_t b = 0; b < n_inputs; ++b) {
          std::array<std::uint64_t, 4> cells = {0, 0, 0, 0};
          for (std::uint64_t member = 0; member < n_members; ++member) {
            const int fa = detail::popcount_parity(member & a);
            const int fb = detail::popcount_parity(member & b);
            ++cells[static_cast<std::size_t>(2 * fa + fb)];
          }
          const std::uint64_t quarter = n_members / 4;
          if (n_members % 4 == 0 && cells[0] == quarter && cells[1] == quarter &&
              cells[2] == quarter && cells[3] == quarter)
            ++good;
        }
      }
      return 1.0 - static_cast<double>(good) /
                       (static_cast<double>(n_inputs) * static_cast<double>(n_inputs));
    };
  }
  return cls;
}

// The manifold-lifted class {f_S = continuous parity of the selected
// prefix, S over the first code_bits - truncation blocks} under the
// uniform curve distribution. Exact machinery (code_bits <= 8) enumerates
// segments with composite Gauss-Legendre quadrature in the angle;
// constant-prefix segments integrate exactly.
inline FunctionClass manifold_parity_class(const manifold::ManifoldSpec& spec, int truncation) {
  if (spec.intrinsic_dim() != 1)
    throw std::domain_error("manifold_parity_class: exactness requires intrinsic dimension 1");
  const int m = spec.code_bits() - truncation;
  if (m < 1 || truncation < 1)
    throw std::domain_error("manifold_parity_class: bad truncation");
  FunctionClass cls;
  cls.size = std::uint64_t{1} << m;
  cls.value = [spec, m](std::size_t member, const Vec& x) {
    const Vec prefix = manifold::project_prefix(x, spec, m);
    double acc = 0.0;
    for (int j = 0; j < m; ++j)
      if ((member >> j) & 1u) acc += prefix[static_cast<std::size_t>(j)];
    return targets::triangle_wave(acc);
  };
  cls.sample_input = [spec](Rng& rng) { return manifold::sample_uniform(spec, rng).ambient; };

  if (spec.code_bits() <= 8) {
    const std::size_t n_members = cls.size;
    // Quadrature nodes and all member values are precomputed once; a query
    // then only pays for its own evaluations.
    struct QuadratureTable {
      std::vector<Vec> points;
      std::vector<double> weights;
      std::vector<double> values;  // points x members, row-major
    };
    auto table = std::make_shared<QuadratureTable>();
    {
      const std::uint64_t n_seg = spec.segment_count();
      constexpr int panels = 6;
      const double seg_weight = 1.0 / static_cast<double>(n_seg);
      for (std::uint64_t k = 0; k < n_seg; ++k) {
        const auto ki = spec.index(static_cast<std::int64_t>(k));
        for (int panel = 0; panel < panels; ++panel) {
          const double lo = manifold::kHalfPi * panel / panels;
          const double hi = manifold::kHalfPi * (panel + 1) / panels;
          const double mid = 0.5 * (lo + hi);
          const double half = 0.5 * (hi - lo);
          for (std::size_t q = 0; q < detail::kGlNodes.size(); ++q) {
            const double t = mid + half * detail::kGlNodes[q];
            table->points.push_back(manifold::segment_point(spec, ki, t));
            // Quadrature weight normalized to the uniform angle measure.
            table->weights.push_back(seg_weight * detail::kGlWeights[q] * half /
                                     manifold::kHalfPi);
          }
        }
      }
      table->values.reserve(table->points.size() * n_members);
      for (const Vec& x : table->points) {
        const Vec prefix = manifold::project_prefix(x, spec, m);
        for (std::uint64_t member = 0; member < n_members; ++member) {
          double acc = 0.0;
          for (int j = 0; j < m; ++j)
            if ((member >> j) & 1u) acc += prefix[static_cast<std::size_t>(j)];
          table->values.push_back(targets::triangle_wave(acc));
        }
      }
    }
    cls.member_means = [table, n_members](const QueryFn& g) {
      std::vector<double> means(n_members, 0.0);
      for (std::size_t p = 0; p < table->points.size(); ++p) {
        const Vec& x = table->points[p];
        const double w = table->weights[p];
        const double* values = &table->values[p * n_members];
        for (std::size_t member = 0; member < n_members; ++member) {
          const double val = g(x, values[member]);
          if (std::abs(val) > 1.0 + 1e-12)
            throw std::domain_error("sq query: output outside [-1, 1]");
          means[member] += w * val;
        }
      }
      return means;
    };
    cls.exact_eta = [spec, truncation, m]() {
      const auto census = manifold::enumerate_prefix_census(spec, truncation);
      const std::uint64_t n_seg = spec.segment_count();
      std::vector<std::uint64_t> count(std::uint64_t{1} << m, 0);
      for (const auto& prefix : census.segment_prefix)
        if (prefix) ++count[*prefix];
      // Pairs of clean segments with distinct, non-zero prefixes induce the
      // exact uniform product law over {0,1}^2; everything else fails.
      std::uint64_t nonzero_total = 0;
      std::uint64_t nonzero_sq = 0;
      for (std::size_t z = 1; z < count.size(); ++z) {
        nonzero_total += count[z];
        nonzero_sq += count[z] * count[z];
      }
      const double pairs = static_cast<double>(n_seg) * static_cast<double>(n_seg);
      const double good = static_cast<double>(nonzero_total) * static_cast<double>(nonzero_total) -
                          static_cast<double>(nonzero_sq);
      return 1.0 - good / pairs;
    };
  }
  return cls;
}

enum class Policy { honest_mc, adversarial_mean };

struct OracleConfig {
  std::size_t honest_budget = 0;       // 0: derive ceil(9 / tau^2) from the tolerance
  std::size_t mc_member_samples = 4000;  // adversarial fallback sample count
  std::uint64_t seed = 1;
};

// Statistical query oracle over the labeled distribution (x, f*(x)).
// Honest policy: Monte Carlo answer with standard error driven below
// tau/3. Adversarial policy: answers the class mean whenever that stays
// within the tolerance contract, which is the response pattern behind the
// variance lower-bound argument. Queries with outputs outside [-1,1] are
// rejected without consuming a query.
class SqOracle {
 public:
  SqOracle(FunctionClass cls, std::size_t true_member, double tau, Policy policy,
           OracleConfig config = {})
      : cls_(std::move(cls)),
        true_member_(true_member),
        tau_(tau),
        policy_(policy),
        config_(config),
        rng_(config.seed) {
    if (tau <= 0.0) throw std::domain_error("SqOracle: tolerance must be positive");
    if (true_member_ >= cls_.size) throw std::domain_error("SqOracle: bad true member");
    if (policy_ == Policy::adversarial_mean && !cls_.member_means) {
      // Shared evaluation sample, drawn once: identical queries then get
      // identical answers and member means stay mutually consistent.
      Rng sample_rng(config.seed);
      mc_inputs_.reserve(config_.mc_member_samples);
      for (std::size_t i = 0; i < config_.mc_member_samples; ++i)
        mc_inputs_.push_back(cls_.sample_input(sample_rng));
    }
  }

  std::size_t query_count() const { return query_count_; }
  double tolerance() const { return tau_; }
  std::size_t class_size() const { return cls_.size; }

  double query(const QueryFn& g, std::size_t budget_override = 0) {
    const double answer = (policy_ == Policy::honest_mc) ? honest_answer(g, budget_override)
                                                         : adversarial_answer(g);
    ++query_count_;
    return answer;
  }

  // Exact or shared-sample expectation of the query against every class
  // member; exposed for experiment diagnostics and tests.
  std::vector<double> member_means(const QueryFn& g) const {
    if (cls_.member_means) return cls_.member_means(g);
    std::vector<double> means(cls_.size, 0.0);
    if (mc_inputs_.empty())
      throw std::logic_error("SqOracle: no evaluation machinery for member means");
    for (const Vec& x : mc_inputs_) {
      for (std::size_t i = 0; i < cls_.size; ++i) {
        const double val = g(x, cls_.value(i, x));
        if (std::abs(val) > 1.0 + 1e-12)
          throw std::domain_error("sq query: output outside [-1, 1]");
        means[i] += val;
      }
    }
    for (double& v : means) v /= static_cast<double>(mc_inputs_.size());
    return means;
  }

 private:
  double honest_answer(const QueryFn& g, std::size_t budget_override) {
    std::size_t budget = budget_override ? budget_override : config_.honest_budget;
    if (budget == 0)
      budget = static_cast<std::size_t>(std::ceil(9.0 / (tau_ * tau_)));
    double sum = 0.0;
    for (std::size_t i = 0; i < budget; ++i) {
      const Vec x = cls_.sample_input(rng_);
      const double val = g(x, cls_.value(true_member_, x));
      if (std::abs(val) > 1.0 + 1e-12)
        throw std::domain_error("sq query: output outside [-1, 1]");
      sum += val;
    }
    return sum / static_cast<double>(budget);
  }

  double adversarial_answer(const QueryFn& g) const {
    const std::vector<double> means = member_means(g);
    double class_mean = 0.0;
    for (double v : means) class_mean += v;
    class_mean /= static_cast<double>(means.size());
    const double truth = means[true_member_];
    return (std::abs(truth - class_mean) <= tau_) ? class_mean : truth;
  }

  FunctionClass cls_;
  std::size_t true_member_;
  double tau_;
  Policy policy_;
  OracleConfig config_;
  Rng rng_;
  std::vector<Vec> mc_inputs_;
  std::size_t query_count_ = 0;
};

enum class EtaMethod { exact, monte_carlo };

struct PairwiseIndependenceReport {
  double eta = 1.0;
  EtaMethod method = EtaMethod::exact;
  std::size_t trials = 0;
};

// Fraction of input pairs on which the class-induced joint law of
// (f(x), f(x')) fails to be the uniform product over {0,1}. Exact mode
// uses the class's enumeration; Monte Carlo samples pairs and tallies the
// class per pair.
inline PairwiseIndependenceReport pairwise_independence(const FunctionClass& cls,
                                                        EtaMethod method,
                                                        std::size_t trials, Rng& rng) {
  PairwiseIndependenceReport report;
  report.method = method;
  if (method == EtaMethod::exact) {
    if (!cls.exact_eta)
      throw std::domain_error("pairwise_independence: exact mode unavailable for this class");
    report.eta = cls.exact_eta();
    return report;
  }
  if (cls.size > 4096)
    throw std::domain_error("pairwise_independence: class too large to tally per pair");
  report.trials = trials;
  std::size_t bad = 0;
  const std::size_t quarter = cls.size / 4;
  std::array<std::size_t, 4> cells{};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Vec a = cls.sample_input(rng);
    const Vec b = cls.sample_input(rng);
    cells = {0, 0, 0, 0};
    bool boolean = (cls.size % 4 == 0);
    for (std::size_t i = 0; i < cls.size && boolean; ++i) {
      const double fa = cls.value(i, a);
      const double fb = cls.value(i, b);
      if ((fa != 0.0 && fa != 1.0) || (fb != 0.0 && fb != 1.0)) {
        boolean = false;
        break;
      }
      ++cells[static_cast<std::size_t>(2 * (fa != 0.0) + (fb != 0.0))];
    }
    const bool uniform = boolean && cells[0] == quarter && cells[1] == quarter &&
                         cells[2] == quarter && cells[3] == quarter;
    if (!uniform) ++bad;
  }
  report.eta = static_cast<double>(bad) / static_cast<double>(trials);
  return report;
}

struct VarianceCheckReport {
  double eta = 0.0;
  double bound = 0.0;        // 2*eta plus Monte Carlo slack
  double mc_slack = 0.0;
  std::vector<double> variances;
  bool all_pass = true;
};

// Measures Var_{f ~ Unif(C)}[phi[f]] for each pooled query and checks the
// pairwise-independence bound Var <= 2*eta (plus explicit slack when the
// member means are Monte Carlo estimates).
inline VarianceCheckReport variance_bound_check(const FunctionClass& cls,
                                                const std::vector<QueryFn>& queries,
                                                double eta, std::size_t mc_samples,
                                                Rng& rng) {
  VarianceCheckReport report;
  report.eta = eta;

  std::vector<Vec> shared_inputs;
  if (!cls.member_means) {
    shared_inputs.reserve(mc_samples);
    for (std::size_t i = 0; i < mc_samples; ++i) shared_inputs.push_back(cls.sample_input(rng));
    report.mc_slack = 6.0 / std::sqrt(static_cast<double>(mc_samples));
  }
  report.bound = 2.0 * eta + report.mc_slack;

  for (const auto& g : queries) {
    std::vector<double> means;
    if (cls.member_means) {
      means = cls.member_means(g);
    } else {
      means.assign(cls.size, 0.0);
      for (const Vec& x : shared_inputs)
        for (std::size_t i = 0; i < cls.size; ++i) means[i] += g(x, cls.value(i, x));
      for (double& v : means) v /= static_cast<double>(shared_inputs.size());
    }
    double mu = 0.0;
    for (double v : means) mu += v;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (double v : means) var += (v - mu) * (v - mu);
    var /= static_cast<double>(means.size());
    report.variances.push_back(var);
    if (var > report.bound) report.all_pass = false;
  }
  return report;
}

// Correlation query for candidate member T: g(x, y) = (2y-1)(2 f_T(x)-1),
// bounded in [-1,1] for outputs in [0,1].
inline QueryFn correlation_query(const FunctionClass& cls, std::size_t candidate) {
  return [value = cls.value, candidate](const Vec& x, double y) {
    return (2.0 * y - 1.0) * (2.0 * value(candidate, x) - 1.0);
  };
}

struct ScanResult {
  std::size_t queries_used = 0;
  bool success = false;
  std::size_t identified = 0;
};

// The canonical SQ strategy against the parity family: scan candidate
// subsets with correlation queries until one answer clears the detection
// threshold. Against the adversarial oracle every wrong candidate is
// answered with the class mean, so the query count grows with the class
// size; this is the measurable face of the tau^2/(2 eta) lower bound.
inline ScanResult correlation_scan(SqOracle& oracle, const FunctionClass& cls,
                                   const std::vector<std::size_t>& order,
                                   double detection_threshold = 0.5) {
  ScanResult result;
  if (cls.size == 1) return {0, true, 0};
  for (std::size_t candidate : order) {
    const double answer = oracle.query(correlation_query(cls, candidate));
    ++result.queries_used;
    if (answer >= detection_threshold) {
      result.success = true;
      result.identified = candidate;
      return result;
    }
  }
  return result;
}

}  // namespace mlab::sq
