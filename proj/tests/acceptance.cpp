// Acceptance suite: one criterion per function, one PASS/FAIL line each,
// non-zero exit on any failure. Every tolerance is pinned here in code.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "mlab/experiments.hpp"

using namespace mlab;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  [%2d] %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, ...) {
  char buffer[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buffer, sizeof buffer, pattern, args);
  va_end(args);
  return buffer;
}

// 1. Gray code exhaustive suite: cyclic Hamming distance one, bijectivity,
//    and the k=3 reference sequence. Budget: < 5 s.
void criterion_gray_code() {
  bool pass = true;
  const std::vector<std::string> reference = {"000", "001", "011", "010",
                                              "110", "111", "101", "100"};
  for (std::uint64_t i = 0; i < 8; ++i)
    pass = pass && gray::gray(i, 3).to_string() == reference[i];
  for (int k = 1; k <= 16 && pass; ++k) {
    const std::uint64_t n = std::uint64_t{1} << k;
    std::vector<bool> seen(n, false);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto word = gray::gray(i, k);
      if (gray::hamming(word, gray::gray((i + 1) % n, k)) != 1) pass = false;
      const auto value = word.to_word();
      if (seen[value]) pass = false;
      seen[value] = true;
    }
  }
  report(1, "gray code exhaustive", pass, "k <= 16 cyclic distance 1 + bijection + k=3 table");
}

// 2. Manifold structure: segment continuity <= 1e-10 and exactly 2^nb
//    rounded mid-segment corners for nb <= 12. Budget: < 30 s.
void criterion_manifold_structure() {
  bool pass = true;
  double worst_gap = 0.0;
  for (int nb = 2; nb <= 12; ++nb) {
    const manifold::ManifoldSpec spec(0.5, 1, nb);
    std::set<std::string> corners;
    for (std::uint64_t k = 0; k < spec.segment_count(); ++k) {
      const auto ki = spec.index(static_cast<std::int64_t>(k));
      const Vec end = manifold::segment_point(spec, ki, manifold::kHalfPi);
      const Vec next = manifold::segment_point(spec, ki.neighbor(+1), 0.0);
      worst_gap = std::max(worst_gap, distance(end, next));
      corners.insert(
          manifold::round_to_corner(manifold::segment_point(spec, ki, manifold::kPi / 4.0))
              .to_string());
    }
    if (worst_gap > 1e-10) pass = false;
    if (corners.size() != spec.segment_count()) pass = false;
  }
  report(2, "manifold structure", pass,
         fmt("continuity gap %.2e (<= 1e-10), corner counts exact for nb <= 12", worst_gap));
}

// 3. Boolean-prefix bound at nb=8, t=4 with 1e5 samples, plus exact
//    nb=6 enumeration vs Monte Carlo within 3 sigma.
void criterion_boolean_prefix() {
  Rng rng(301);
  const manifold::ManifoldSpec spec8(0.5, 1, 8);
  const std::size_t trials = 100000;
  const auto stats8 = manifold::boolean_prefix_stats(spec8, 4, trials, rng);
  const double sigma = std::sqrt(0.25 / static_cast<double>(trials));
  const double non_boolean = 1.0 - stats8.frac_boolean;
  const bool bound_ok = non_boolean <= 8.0 * std::pow(2.0, -4) + 3.0 * sigma;

  const manifold::ManifoldSpec spec6(0.5, 1, 6);
  const auto census = manifold::enumerate_prefix_census(spec6, 3);
  const auto mc = manifold::boolean_prefix_stats(spec6, 3, trials, rng);
  const double sb =
      std::sqrt(census.frac_boolean * (1.0 - census.frac_boolean) / trials);
  const double sc =
      std::sqrt(census.frac_collision * (1.0 - census.frac_collision) / trials);
  const bool exact_ok =
      std::abs(mc.frac_boolean - census.frac_boolean) <= 3.0 * sb &&
      std::abs(mc.frac_collision - census.frac_collision) <= 3.0 * sc;

  report(3, "boolean prefix bound", bound_ok && exact_ok,
         fmt("non-boolean %.4f <= %.4f; nb=6 exact %.4f vs mc %.4f", non_boolean,
             8.0 * std::pow(2.0, -4) + 3.0 * sigma, census.frac_boolean, mc.frac_boolean));
}

// 4. Target fidelity: the ReLU realization equals the continuous parity to
//    1e-9 on 1e4 sampled grid points for |S| <= 10, and both equal the
//    Boolean parity exhaustively for m <= 10.
void criterion_target_fidelity() {
  Rng rng(401);
  bool pass = true;
  double worst = 0.0;
  for (int m : {1, 2, 3, 5, 7, 10}) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto subset = (rep == 0) ? targets::ParitySubset::from_mask((1u << m) - 1, m)
                                     : targets::ParitySubset::random_nonempty(m, rng);
      const auto net = targets::parity_as_relu_net(subset);
      const int points = 10000 / 6;
      for (int i = 0; i < points; ++i) {
        Vec x(static_cast<std::size_t>(m));
        for (double& c : x) c = rng.uniform();
        worst = std::max(worst,
                         std::abs(net.forward(x) - targets::continuous_parity(subset, x)));
      }
    }
  }
  if (worst > 1e-9) pass = false;

  for (int m = 1; m <= 10 && pass; ++m) {
    for (std::uint64_t s_mask = 1; s_mask < (1u << m); s_mask += (m < 7 ? 1 : 13)) {
      const auto subset = targets::ParitySubset::from_mask(s_mask, m);
      const auto net = targets::parity_as_relu_net(subset);
      for (std::uint64_t x_mask = 0; x_mask < (1u << m); ++x_mask) {
        Vec x(static_cast<std::size_t>(m));
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
          bits[static_cast<std::size_t>(j)] = (x_mask >> j) & 1u;
          x[static_cast<std::size_t>(j)] = bits[static_cast<std::size_t>(j)];
        }
        const int truth = targets::parity_chi(subset, gray::BitString(bits));
        if (std::abs(targets::continuous_parity(subset, x) - truth) > 1e-12) pass = false;
        if (std::abs(net.forward(x) - truth) > 1e-9) pass = false;
      }
    }
  }
  report(4, "parity target fidelity", pass,
         fmt("max |net - continuous| = %.2e (<= 1e-9); Boolean match m <= 10", worst));
}

// 5. Gradient correctness: analytic vs central differences within 1e-6
//    relative on five random nets up to depth 3, width 8.
void criterion_gradients() {
  bool pass = true;
  double worst = 0.0;
  for (std::uint64_t seed = 500; seed < 505; ++seed) {
    Rng rng(seed);
    const int depth = 1 + static_cast<int>(seed % 3);
    std::vector<std::size_t> widths(static_cast<std::size_t>(depth), 8);
    auto net = nn::random_network(5, widths,
                                  (seed % 2) ? nn::BiasPlacement::inside_relu
                                             : nn::BiasPlacement::after_relu,
                                  rng);
    for (auto& layer : net.layers())
      for (double& b : layer.bias) b = rng.normal(0.0, 0.3);
    std::vector<LabeledSample> batch;
    for (int i = 0; i < 5; ++i) {
      Vec x(5);
      for (double& c : x) c = rng.normal();
      batch.push_back({x, rng.normal()});
    }
    const auto grad = nn::mse_grad(net, batch);
    const double h = 1e-5;
    auto probe = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + h;
      const double up = nn::mse(net, batch);
      param = keep - h;
      const double down = nn::mse(net, batch);
      param = keep;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(fd - analytic) / std::max({1.0, std::abs(fd), std::abs(analytic)});
      worst = std::max(worst, rel);
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      for (std::size_t i = 0; i < net.layers()[l].weights.data().size(); ++i)
        probe(net.layers()[l].weights.data()[i], grad.layers[l].weights.data()[i]);
      for (std::size_t i = 0; i < net.layers()[l].bias.size(); ++i)
        probe(net.layers()[l].bias[i], grad.layers[l].bias[i]);
    }
    for (std::size_t i = 0; i < net.readout().size(); ++i)
      probe(net.readout()[i], grad.readout[i]);
  }
  pass = worst <= 1e-6;
  report(5, "gradient check", pass, fmt("max relative deviation %.2e (<= 1e-6)", worst));
}

// 6. Learnable regime at desk scale: d=10 hypersphere, n in {16,32,64},
//    1000 training samples, width-100 student, random width-ceil(n/4)
//    normalized target; final relative test MSE <= 0.1 for every n.
void criterion_learnable_regime() {
  experiments::ExperimentConfig cfg;
  cfg.kind = "learnable";
  cfg.seed = 42;
  cfg.snapshot = "{acceptance criterion 6}";
  experiments::LearnableConfig lc;
  lc.ambient_grid = {16, 32, 64};
  lc.steps = 8000;
  cfg.learnable = lc;
  const auto manifest = experiments::run_learnable(cfg, "acceptance_out/learnable");
  bool pass = manifest.status == experiments::RunStatus::ok;
  std::string detail;
  for (int n : lc.ambient_grid) {
    const double mse = manifest.metrics.at("final_rel_mse_n" + std::to_string(n));
    pass = pass && mse <= 0.1;
    detail += fmt("n%d %.4f ", n, mse);
  }
  report(6, "learnable regime (sphere)", pass, detail + "(all <= 0.1)");
}

// 7. Hard regime at desk scale: R=0.5, d=1, full-prefix parity target with
//    t=nb/2, width-2n student, fresh batches, the same 3000-step budget for
//    both sizes; median over 5 seeds must be <= 0.1 at nb=4 and >= 0.5 at
//    nb=16.
void criterion_hard_regime() {
  std::map<int, std::vector<double>> finals;
  for (int nb : {4, 16}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed * 31 + static_cast<std::uint64_t>(nb));
      const double c = rng.uniform(-2.0, 1.0);
      const manifold::ManifoldSpec spec(0.5, 1, nb);
      const int m = nb - nb / 2;
      std::vector<int> all;
      for (int i = 0; i < m; ++i) all.push_back(i);
      const targets::HardTargetSpec tspec(spec, targets::ParitySubset(all, m));
      const auto target = targets::hard_target(tspec);
      const LabeledSampler data = labeled(manifold::make_sampler(spec),
                                          [&target](const Vec& x) { return target.forward(x); });
      std::vector<LabeledSample> test;
      for (int i = 0; i < 4000; ++i) test.push_back(data(rng));
      auto student = nn::random_network(spec.ambient_dim(), {2 * spec.ambient_dim()},
                                        nn::BiasPlacement::inside_relu, rng, std::sqrt(2.0));
      nn::TrainConfig tc;
      tc.optimizer = nn::OptimizerKind::sgd;
      tc.base_learning_rate = 0.01;
      tc.lr_log_multiplier = c;
      tc.batch_size = 128;
      tc.steps = 3000;
      tc.seed = rng.next_u64();
      tc.fresh_batches = true;
      tc.eval_every = 3000;
      const auto result = nn::train(student, nn::fresh_batches(data, tc.batch_size), tc, test);
      finals[nb].push_back(result.final_test_mse());
    }
  }
  const double median4 = median(finals[4]);
  const double median16 = median(finals[16]);
  const bool pass = median4 <= 0.1 && median16 >= 0.5;
  report(7, "hard regime (curve)", pass,
         fmt("median rel MSE nb=4: %.4f (<= 0.1), nb=16: %.4f (>= 0.5)", median4, median16));
}

// 8. SQ variance bound: parity class at d=8, 100 random bounded queries,
//    measured Var_f[phi[f]] <= 2*eta with eta from exact enumeration.
void criterion_sq_variance() {
  const int d = 8;
  auto cls = sq::boolean_parity_class(d);
  const double eta = cls.exact_eta();
  Rng rng(801);
  std::vector<sq::QueryFn> queries;
  for (int i = 0; i < 100; ++i) {
    Vec w(d);
    for (double& c : w) c = rng.uniform(-0.25, 0.25);
    const double a = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-0.3, 0.3);
    queries.push_back([w, a, b](const Vec& x, double y) {
      double v = a * y + b;
      for (std::size_t j = 0; j < w.size(); ++j) v += w[j] * x[j];
      return std::clamp(v, -1.0, 1.0);
    });
  }
  const auto check = sq::variance_bound_check(cls, queries, eta, 0, rng);
  const double worst = *std::max_element(check.variances.begin(), check.variances.end());
  report(8, "sq variance bound", check.all_pass,
         fmt("max Var %.5f <= 2*eta = %.5f (eta exact %.5f)", worst, 2.0 * eta, eta));
}

// 9. SQ scaling: correlation scan against the adversarial oracle over
//    nb in {4,6,8,10}; slope of log2(mean queries) on nb - t within 1 +- 0.2.
void criterion_sq_scaling() {
  experiments::ExperimentConfig cfg;
  cfg.kind = "sq";
  cfg.seed = 901;
  cfg.snapshot = "{acceptance criterion 9}";
  experiments::SqConfig sc;
  sc.code_bits_grid = {4, 6, 8, 10};
  sc.seeds_per_size = 60;
  cfg.sq = sc;
  const auto manifest = experiments::run_sq(cfg, "acceptance_out/sq");
  const double slope = manifest.metrics.at("log2_queries_slope");
  bool pass = manifest.status == experiments::RunStatus::ok && slope >= 0.8 && slope <= 1.2;
  report(9, "sq query scaling", pass, fmt("log2 queries vs nb-t slope %.3f (1 +- 0.2)", slope));
}

// 10. Interpolation learner: S^2 supported on a 3-dimensional subspace of
//     R^10, random width-8 normalized target, eps_out = 0.2, delta = 0.01;
//     fresh-sample MSE within the radius-plus-uncovered budget and
//     uncovered fraction <= 2*delta.
void criterion_interpolation() {
  Rng rng(3);
  const auto sphere = manifold::HypersphereSpec::random(3, 10, rng);
  const PointSampler sampler = manifold::make_sampler(sphere);
  const auto target = targets::random_target(10, 8, 50.0, sampler, rng).net;
  const double eps_out = 0.2, delta = 0.01;
  const auto model = learner::fit_interpolator(target, sampler, eps_out, delta, 2000000, rng);
  Rng fresh(1003);
  const auto eval = learner::evaluate(model, target, sampler, 10000, fresh);
  double max_out = 0.0;
  for (int i = 0; i < 5000; ++i)
    max_out = std::max(max_out, std::abs(target.forward(sampler(fresh))));
  const double budget =
      eps_out * eps_out + eval.uncovered_fraction * (2.0 * max_out) * (2.0 * max_out);
  const bool pass = model.certified() && eval.mse <= budget &&
                    eval.uncovered_fraction <= 2.0 * delta;
  report(10, "interpolation learner", pass,
         fmt("mse %.5f <= %.5f, uncovered %.4f <= %.3f, anchors %zu", eval.mse, budget,
             eval.uncovered_fraction, 2.0 * delta, model.net.anchors.size()));
}

// 11. Geometry checks: the packing/covering chain on 20 random clouds and
//     the coupon-collector mean within 10% of n*H_n at n=100, 1e3 trials.
void criterion_geometry_checks() {
  Rng rng(1101);
  bool duality = true;
  for (int cloud = 0; cloud < 20; ++cloud) {
    std::vector<Vec> points;
    const int dim = 2 + cloud % 3;
    for (int i = 0; i < 1000; ++i) {
      Vec p(static_cast<std::size_t>(dim));
      for (double& v : p) v = rng.uniform();
      points.push_back(std::move(p));
    }
    duality = duality && geom::duality_report(points, 0.1).duality_holds();
  }
  const auto coupon = geom::coupon_collector_sim(100, 1000, rng);
  const double exact = 100.0 * geom::harmonic_number(100);
  const double rel_err = std::abs(coupon.mean_stop_time - exact) / exact;
  const bool pass = duality && rel_err <= 0.10;
  report(11, "cover/packing + coupon", pass,
         fmt("duality 20/20 %s; coupon mean %.1f vs %.1f (err %.3f <= 0.1)",
             duality ? "hold" : "violated", coupon.mean_stop_time, exact, rel_err));
}

// 12. Intrinsic dimension suite: hypersphere rows (20,2) -> [2,4],
//     (20,10) -> [8,12], (100,50) -> [42,53], (100,90) -> [78,95].
//     Budget: < 5 min total.
void criterion_intrinsic_dimension() {
  experiments::ExperimentConfig cfg;
  cfg.kind = "iddim";
  cfg.seed = 2026;
  cfg.snapshot = "{acceptance criterion 12}";
  experiments::IddimConfig ic;
  ic.suite = {{20, 2, 0, 0}, {20, 10, 0, 0}, {100, 50, 0, 0}, {100, 90, 0, 0}};
  cfg.iddim = ic;
  const auto manifest = experiments::run_iddim(cfg, "acceptance_out/iddim");
  struct Band {
    int ambient, intrinsic, lo, hi;
  };
  const std::vector<Band> bands = {{20, 2, 2, 4}, {20, 10, 8, 12}, {100, 50, 42, 53},
                                   {100, 90, 78, 95}};
  bool pass = true;
  std::string detail;
  for (const auto& band : bands) {
    const std::string tag =
        "_n" + std::to_string(band.ambient) + "_d" + std::to_string(band.intrinsic);
    const double rounded = manifest.metrics.at("rounded_d" + tag);
    pass = pass && rounded >= band.lo && rounded <= band.hi;
    detail += fmt("(%d,%d)->%g ", band.ambient, band.intrinsic, rounded);
  }
  report(12, "intrinsic dimension table", pass, detail);
}

// 13. Lipschitz product bound: never violated over 1e4 sampled pairs per
//     net, 10 random nets.
void criterion_lipschitz() {
  bool pass = true;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 1300; seed < 1310; ++seed) {
    Rng rng(seed);
    const int depth = 1 + static_cast<int>(seed % 3);
    std::vector<std::size_t> widths(static_cast<std::size_t>(depth),
                                    6 + static_cast<std::size_t>(seed % 5));
    auto net = nn::random_network(8, widths, nn::BiasPlacement::after_relu, rng);
    for (auto& layer : net.layers())
      for (double& b : layer.bias) b = rng.normal(0.0, 0.2);
    const double bound = nn::lipschitz_bound(net);
    for (int i = 0; i < 10000; ++i) {
      Vec x(8), y(8);
      for (double& c : x) c = rng.normal();
      for (double& c : y) c = rng.normal();
      const double lhs = std::abs(net.forward(x) - net.forward(y));
      const double rhs = bound * distance(x, y);
      if (rhs > 0.0) worst_ratio = std::max(worst_ratio, lhs / rhs);
      if (lhs > rhs + 1e-9) pass = false;
    }
  }
  report(13, "lipschitz product bound", pass,
         fmt("max |f(x)-f(x')| / (bound |x-x'|) = %.4f (<= 1)", worst_ratio));
}

}  // namespace

int main() {
  std::printf("acceptance suite, artifact version %s\n", MLAB_VERSION);
  criterion_gray_code();
  criterion_manifold_structure();
  criterion_boolean_prefix();
  criterion_target_fidelity();
  criterion_gradients();
  criterion_learnable_regime();
  criterion_hard_regime();
  criterion_sq_variance();
  criterion_sq_scaling();
  criterion_interpolation();
  criterion_geometry_checks();
  criterion_intrinsic_dimension();
  criterion_lipschitz();
  std::printf("%d of 13 criteria passed\n", 13 - failures);
  return failures == 0 ? 0 : 1;
}
