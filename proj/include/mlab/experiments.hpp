#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mlab/csv.hpp"
#include "mlab/geometry.hpp"
#include "mlab/iddim.hpp"
#include "mlab/json_io.hpp"
#include "mlab/learner.hpp"
#include "mlab/manifold.hpp"
#include "mlab/nn.hpp"
#include "mlab/sq.hpp"
#include "mlab/targets.hpp"

#ifndef MLAB_VERSION
#define MLAB_VERSION "0.0.0-dev"
#endif

namespace mlab::experiments {

namespace fs = std::filesystem;

// A completed run: ok means fully converged/certified, flagged means the
// run finished but some component missed its contract (divergence, failed
// certification); callers map this to exit codes 0 and 2.
enum class RunStatus { ok, flagged };

struct RunManifest {
  std::string kind;
  std::uint64_t seed = 0;
  std::string artifact_version = MLAB_VERSION;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> outputs;
  std::map<std::string, double> metrics;
  RunStatus status = RunStatus::ok;
  std::string config_snapshot;  // byte-identical input config
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void finalize(RunManifest& manifest, const fs::path& out_dir, const Stopwatch& clock) {
  manifest.wall_clock_seconds = clock.seconds();
  io::json j{{"kind", manifest.kind},
             {"seed", manifest.seed},
             {"artifact_version", manifest.artifact_version},
             {"wall_clock_seconds", manifest.wall_clock_seconds},
             {"outputs", manifest.outputs},
             {"metrics", manifest.metrics},
             {"status", manifest.status == RunStatus::ok ? "ok" : "flagged"},
             {"config_snapshot", manifest.config_snapshot}};
  io::write_json_atomic((out_dir / "manifest.json").string(), j);

  io::json summary{{"kind", manifest.kind},
                   {"seed", manifest.seed},
                   {"status", manifest.status == RunStatus::ok ? "ok" : "flagged"},
                   {"metrics", manifest.metrics}};
  io::write_json_atomic((out_dir / "summary.json").string(), summary);
}

inline void write_trace_csv(const fs::path& path, const std::vector<nn::TraceRow>& trace) {
  CsvWriter csv(path.string(), {"step", "train_mse", "test_mse", "lr"});
  for (const auto& row : trace)
    csv.row({static_cast<double>(row.step), row.train_mse, row.test_mse, row.lr});
}

inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  if (den == 0.0) throw std::domain_error("regression_slope: degenerate abscissa");
  return num / den;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configs. JSON with a `kind` discriminator; unknown keys fail immediately.
// ---------------------------------------------------------------------------

struct LearnableConfig {
  std::vector<int> ambient_grid = {16, 32, 64};
  int sphere_dim = 10;      // subspace dimension of the input hypersphere
  int train_size = 1000;
  int test_size = 2000;
  int student_width = 100;
  int steps = 8000;
  int batch_size = 128;
  double base_lr = 3e-3;
  std::string optimizer = "adam";
  double target_weight_bound = 50.0;
};

struct HardConfig {
  std::vector<int> code_bits_grid = {4, 8, 12, 16};
  double reach = 0.5;
  int width_multiplier = 2;  // student width = multiplier * ambient dim
  int depth = 1;             // 3 replicates the deep-student variant
  int steps = 3000;
  int batch_size = 128;
  int test_size = 4000;
  double base_lr = 1e-2;
  std::string optimizer = "sgd";
  std::string subset = "random";  // random | full (the whole truncated prefix)
};

struct SqConfig {
  std::vector<int> code_bits_grid = {4, 6, 8, 10};
  double reach = 0.5;
  double tolerance = 0.1;
  int seeds_per_size = 60;
  double detection_threshold = 0.5;
  std::size_t mc_member_samples = 4000;
};

struct IddimSuiteRow {
  int ambient = 20;
  int intrinsic = 10;
  std::size_t samples = 0;  // 0: derived below
  double sigma = 0.0;       // 0: derived below
};

struct IddimConfig {
  std::vector<IddimSuiteRow> suite;     // synthetic hypersphere suite
  std::string cloud_csv;                // alternative: point-cloud input
  std::size_t cloud_neighbors = 100;
  std::vector<std::size_t> cloud_centers = {0};
  double relative_threshold = 0.3;
};

struct GeometryConfig {
  std::size_t coupon_bins = 100;
  std::size_t coupon_trials = 1000;
  int duality_clouds = 20;
  int cloud_size = 1000;
  double epsilon = 0.1;
};

struct GenerateConfig {
  std::string source = "manifold";  // manifold | hypersphere
  double reach = 0.5;
  int intrinsic_dim = 1;
  int code_bits = 8;
  int sphere_dim = 10;
  int ambient_dim = 32;
  std::size_t count = 1000;
};

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  std::optional<LearnableConfig> learnable;
  std::optional<HardConfig> hard;
  std::optional<SqConfig> sq;
  std::optional<IddimConfig> iddim;
  std::optional<GeometryConfig> geometry;
  std::optional<GenerateConfig> generate;
  std::string snapshot;  // raw config text
};

inline ExperimentConfig parse_config_json(const io::json& j, const std::string& snapshot) {
  io::check_keys(j,
                 {"kind", "seed", "learnable", "hard", "sq", "iddim", "geometry", "generate"},
                 {"kind", "seed"}, "experiment config");
  ExperimentConfig cfg;
  cfg.kind = j.at("kind").get<std::string>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.snapshot = snapshot;

  if (cfg.kind == "learnable") {
    LearnableConfig c;
    if (j.count("learnable")) {
      const auto& b = j.at("learnable");
      io::check_keys(b,
                     {"ambient_grid", "sphere_dim", "train_size", "test_size", "student_width",
                      "steps", "batch_size", "base_lr", "optimizer", "target_weight_bound"},
                     {}, "learnable config");
      c.ambient_grid = b.value("ambient_grid", c.ambient_grid);
      c.sphere_dim = b.value("sphere_dim", c.sphere_dim);
      c.train_size = b.value("train_size", c.train_size);
      c.test_size = b.value("test_size", c.test_size);
      c.student_width = b.value("student_width", c.student_width);
      c.steps = b.value("steps", c.steps);
      c.batch_size = b.value("batch_size", c.batch_size);
      c.base_lr = b.value("base_lr", c.base_lr);
      c.optimizer = b.value("optimizer", c.optimizer);
      c.target_weight_bound = b.value("target_weight_bound", c.target_weight_bound);
    }
    cfg.learnable = c;
  } else if (cfg.kind == "hard") {
    HardConfig c;
    if (j.count("hard")) {
      const auto& b = j.at("hard");
      io::check_keys(b,
                     {"code_bits_grid", "reach", "width_multiplier", "depth", "steps",
                      "batch_size", "test_size", "base_lr", "optimizer", "subset"},
                     {}, "hard config");
      c.code_bits_grid = b.value("code_bits_grid", c.code_bits_grid);
      c.reach = b.value("reach", c.reach);
      c.width_multiplier = b.value("width_multiplier", c.width_multiplier);
      c.depth = b.value("depth", c.depth);
      c.steps = b.value("steps", c.steps);
      c.batch_size = b.value("batch_size", c.batch_size);
      c.test_size = b.value("test_size", c.test_size);
      c.base_lr = b.value("base_lr", c.base_lr);
      c.optimizer = b.value("optimizer", c.optimizer);
      c.subset = b.value("subset", c.subset);
      if (c.subset != "random" && c.subset != "full")
        throw std::runtime_error("hard config: subset must be 'random' or 'full'");
    }
    cfg.hard = c;
  } else if (cfg.kind == "sq") {
    SqConfig c;
    if (j.count("sq")) {
      const auto& b = j.at("sq");
      io::check_keys(b,
                     {"code_bits_grid", "reach", "tolerance", "seeds_per_size",
                      "detection_threshold", "mc_member_samples"},
                     {}, "sq config");
      c.code_bits_grid = b.value("code_bits_grid", c.code_bits_grid);
      c.reach = b.value("reach", c.reach);
      c.tolerance = b.value("tolerance", c.tolerance);
      c.seeds_per_size = b.value("seeds_per_size", c.seeds_per_size);
      c.detection_threshold = b.value("detection_threshold", c.detection_threshold);
      c.mc_member_samples = b.value("mc_member_samples", c.mc_member_samples);
    }
    cfg.sq = c;
  } else if (cfg.kind == "iddim") {
    IddimConfig c;
    if (j.count("iddim")) {
      const auto& b = j.at("iddim");
      io::check_keys(b,
                     {"suite", "cloud_csv", "cloud_neighbors", "cloud_centers",
                      "relative_threshold"},
                     {}, "iddim config");
      if (b.count("suite")) {
        for (const auto& row : b.at("suite")) {
          io::check_keys(row, {"ambient", "intrinsic", "samples", "sigma"},
                         {"ambient", "intrinsic"}, "iddim suite row");
          IddimSuiteRow r;
          r.ambient = row.at("ambient").get<int>();
          r.intrinsic = row.at("intrinsic").get<int>();
          r.samples = row.value("samples", std::size_t{0});
          r.sigma = row.value("sigma", 0.0);
          c.suite.push_back(r);
        }
      }
      c.cloud_csv = b.value("cloud_csv", c.cloud_csv);
      c.cloud_neighbors = b.value("cloud_neighbors", c.cloud_neighbors);
      c.cloud_centers = b.value("cloud_centers", c.cloud_centers);
      c.relative_threshold = b.value("relative_threshold", c.relative_threshold);
    }
    if (c.suite.empty() && c.cloud_csv.empty())
      c.suite = {{20, 2, 0, 0}, {20, 10, 0, 0}, {100, 50, 0, 0}, {100, 90, 0, 0}};
    cfg.iddim = c;
  } else if (cfg.kind == "geometry") {
    GeometryConfig c;
    if (j.count("geometry")) {
      const auto& b = j.at("geometry");
      io::check_keys(b,
                     {"coupon_bins", "coupon_trials", "duality_clouds", "cloud_size", "epsilon"},
                     {}, "geometry config");
      c.coupon_bins = b.value("coupon_bins", c.coupon_bins);
      c.coupon_trials = b.value("coupon_trials", c.coupon_trials);
      c.duality_clouds = b.value("duality_clouds", c.duality_clouds);
      c.cloud_size = b.value("cloud_size", c.cloud_size);
      c.epsilon = b.value("epsilon", c.epsilon);
    }
    cfg.geometry = c;
  } else if (cfg.kind == "generate") {
    GenerateConfig c;
    if (j.count("generate")) {
      const auto& b = j.at("generate");
      io::check_keys(b,
                     {"source", "reach", "intrinsic_dim", "code_bits", "sphere_dim",
                      "ambient_dim", "count"},
                     {}, "generate config");
      c.source = b.value("source", c.source);
      c.reach = b.value("reach", c.reach);
      c.intrinsic_dim = b.value("intrinsic_dim", c.intrinsic_dim);
      c.code_bits = b.value("code_bits", c.code_bits);
      c.sphere_dim = b.value("sphere_dim", c.sphere_dim);
      c.ambient_dim = b.value("ambient_dim", c.ambient_dim);
      c.count = b.value("count", c.count);
    }
    cfg.generate = c;
  } else {
    throw std::runtime_error("experiment config: unknown kind '" + cfg.kind + "'");
  }
  for (const auto& block : {"learnable", "hard", "sq", "iddim", "geometry", "generate"}) {
    if (j.count(block) && cfg.kind != block)
      throw std::runtime_error("experiment config: parameter block '" + std::string(block) +
                               "' does not match kind '" + cfg.kind + "'");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path,
                                    std::optional<std::uint64_t> seed_override = {}) {
  const std::string snapshot = io::read_text_file(path);
  auto cfg = parse_config_json(io::json::parse(snapshot), snapshot);
  if (seed_override) cfg.seed = *seed_override;
  return cfg;
}

// ---------------------------------------------------------------------------
// Runners.
// ---------------------------------------------------------------------------

inline nn::OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "adam") return nn::OptimizerKind::adam;
  if (name == "sgd") return nn::OptimizerKind::sgd;
  throw std::runtime_error("unknown optimizer '" + name + "'");
}

// Sampleable-regime run: hypersphere inputs, random normalized target of
// width ceil(n/4), fixed 1000-sample training set, width-100 student.
inline RunManifest run_learnable(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const LearnableConfig& c = *cfg.learnable;
  detail::Stopwatch clock;
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.kind = "learnable";
  manifest.seed = cfg.seed;
  manifest.config_snapshot = cfg.snapshot;

  Rng base(cfg.seed);
  for (int n : c.ambient_grid) {
    Rng rng = base.split();
    const double lr_multiplier = rng.uniform(-2.0, 1.0);

    const auto sphere = manifold::HypersphereSpec::random(c.sphere_dim, n, rng);
    const PointSampler sampler = manifold::make_sampler(sphere);
    const int target_width = (n + 3) / 4;
    const auto target =
        targets::random_target(static_cast<std::size_t>(n),
                               static_cast<std::size_t>(target_width),
                               c.target_weight_bound, sampler, rng)
            .net;

    std::vector<LabeledSample> train_set, test_set;
    for (int i = 0; i < c.train_size; ++i) {
      const Vec x = sampler(rng);
      train_set.push_back({x, target.forward(x)});
    }
    for (int i = 0; i < c.test_size; ++i) {
      const Vec x = sampler(rng);
      test_set.push_back({x, target.forward(x)});
    }

    nn::ReluNetwork student = nn::random_network(
        static_cast<std::size_t>(n), {static_cast<std::size_t>(c.student_width)},
        nn::BiasPlacement::inside_relu, rng, std::sqrt(2.0));

    nn::TrainConfig tc;
    tc.optimizer = optimizer_from_name(c.optimizer);
    tc.base_learning_rate = c.base_lr;
    tc.lr_log_multiplier = lr_multiplier;
    tc.batch_size = c.batch_size;
    tc.steps = c.steps;
    tc.seed = rng.next_u64();
    tc.eval_every = std::max(1, c.steps / 50);
    const auto result =
        nn::train(student, nn::minibatches(train_set, tc.batch_size), tc, test_set);

    const std::string trace_name = "trace_n" + std::to_string(n) + ".csv";
    detail::write_trace_csv(out_dir / trace_name, result.trace);
    manifest.outputs.push_back(trace_name);
    const std::string target_name = "target_n" + std::to_string(n) + ".json";
    io::write_json_atomic((out_dir / target_name).string(), io::network_to_json(target));
    manifest.outputs.push_back(target_name);
    manifest.metrics["final_rel_mse_n" + std::to_string(n)] = result.final_test_mse();
    manifest.metrics["lr_multiplier_n" + std::to_string(n)] = lr_multiplier;
    manifest.metrics["target_width_n" + std::to_string(n)] = target_width;
    if (result.diverged) {
      manifest.metrics["diverged_n" + std::to_string(n)] = 1.0;
      manifest.status = RunStatus::flagged;
    }
  }
  detail::finalize(manifest, out_dir, clock);
  return manifest;
}

// Hard-regime run: gray-code curve inputs, random parity target over the
// truncated prefix, fresh batch per step, width 2n (or deep) student, the
// same step budget for every size.
inline RunManifest run_hard(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const HardConfig& c = *cfg.hard;
  detail::Stopwatch clock;
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.kind = "hard";
  manifest.seed = cfg.seed;
  manifest.config_snapshot = cfg.snapshot;

  Rng base(cfg.seed);
  for (int nb : c.code_bits_grid) {
    Rng rng = base.split();
    const double lr_multiplier = rng.uniform(-2.0, 1.0);

    const manifold::ManifoldSpec spec(c.reach, 1, nb);
    const int prefix_len = nb - nb / 2;
    std::vector<int> full_prefix;
    for (int i = 0; i < prefix_len; ++i) full_prefix.push_back(i);
    const auto subset = (c.subset == "full")
                            ? targets::ParitySubset(full_prefix, prefix_len)
                            : targets::ParitySubset::random_nonempty(prefix_len, rng);
    const targets::HardTargetSpec target_spec(spec, subset);
    const auto target = targets::hard_target(target_spec);

    const PointSampler sampler = manifold::make_sampler(spec);
    const LabeledSampler data =
        labeled(sampler, [&target](const Vec& x) { return target.forward(x); });

    std::vector<LabeledSample> test_set;
    for (int i = 0; i < c.test_size; ++i) test_set.push_back(data(rng));

    const auto n = spec.ambient_dim();
    const std::size_t width = static_cast<std::size_t>(c.width_multiplier) * n;
    std::vector<std::size_t> widths(static_cast<std::size_t>(c.depth), width);
    nn::ReluNetwork student =
        nn::random_network(n, widths, nn::BiasPlacement::inside_relu, rng, std::sqrt(2.0));

    nn::TrainConfig tc;
    tc.optimizer = optimizer_from_name(c.optimizer);
    tc.base_learning_rate = c.base_lr;
    tc.lr_log_multiplier = lr_multiplier;
    tc.batch_size = c.batch_size;
    tc.steps = c.steps;
    tc.seed = rng.next_u64();
    tc.fresh_batches = true;
    tc.eval_every = std::max(1, c.steps / 50);
    const auto result =
        nn::train(student, nn::fresh_batches(data, tc.batch_size), tc, test_set);

    const std::string trace_name = "trace_nb" + std::to_string(nb) + ".csv";
    detail::write_trace_csv(out_dir / trace_name, result.trace);
    manifest.outputs.push_back(trace_name);
    const std::string target_name = "target_nb" + std::to_string(nb) + ".json";
    io::write_json_atomic((out_dir / target_name).string(),
                          io::hard_target_spec_to_json(target_spec));
    manifest.outputs.push_back(target_name);
    manifest.metrics["final_rel_mse_nb" + std::to_string(nb)] = result.final_test_mse();
    manifest.metrics["lr_multiplier_nb" + std::to_string(nb)] = lr_multiplier;
    manifest.metrics["subset_mask_nb" + std::to_string(nb)] =
        static_cast<double>(subset.mask());
    if (result.diverged) {
      manifest.metrics["diverged_nb" + std::to_string(nb)] = 1.0;
      manifest.status = RunStatus::flagged;
    }
  }
  detail::finalize(manifest, out_dir, clock);
  return manifest;
}

// Correlation-scan query counts against the adversarial oracle over a grid
// of code widths; the log2 of the mean count regresses against nb - t.
inline RunManifest run_sq(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const SqConfig& c = *cfg.sq;
  detail::Stopwatch clock;
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.kind = "sq";
  manifest.seed = cfg.seed;
  manifest.config_snapshot = cfg.snapshot;

  CsvWriter csv((out_dir / "sq_scan.csv").string(),
                {"code_bits", "truncation", "tolerance", "seed", "queries_used", "success"});
  manifest.outputs.push_back("sq_scan.csv");

  std::vector<double> prefix_lens, log2_means;
  Rng base(cfg.seed);
  bool all_succeeded = true;
  for (int nb : c.code_bits_grid) {
    const manifold::ManifoldSpec spec(c.reach, 1, nb);
    const int t = nb / 2;
    auto cls = sq::manifold_parity_class(spec, t);
    double total_queries = 0.0;
    std::size_t successes = 0;
    for (int s = 0; s < c.seeds_per_size; ++s) {
      Rng rng = base.split();
      const std::size_t truth = 1 + rng.uniform_index(cls.size - 1);
      sq::OracleConfig oc;
      oc.mc_member_samples = c.mc_member_samples;
      oc.seed = rng.next_u64();
      sq::SqOracle oracle(cls, truth, c.tolerance, sq::Policy::adversarial_mean, oc);

      std::vector<std::size_t> order(cls.size);
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_index(i)]);

      const auto result = sq::correlation_scan(oracle, cls, order, c.detection_threshold);
      const bool correct = result.success && result.identified == truth;
      all_succeeded = all_succeeded && correct;
      successes += correct ? 1 : 0;
      total_queries += static_cast<double>(result.queries_used);
      csv.row({static_cast<double>(nb), static_cast<double>(t), c.tolerance,
               static_cast<double>(s), static_cast<double>(result.queries_used),
               correct ? 1.0 : 0.0});
    }
    const double mean_queries = total_queries / c.seeds_per_size;
    prefix_lens.push_back(static_cast<double>(nb - t));
    log2_means.push_back(std::log2(mean_queries));
    manifest.metrics["mean_queries_nb" + std::to_string(nb)] = mean_queries;
    manifest.metrics["success_rate_nb" + std::to_string(nb)] =
        static_cast<double>(successes) / c.seeds_per_size;
  }
  if (prefix_lens.size() >= 2)
    manifest.metrics["log2_queries_slope"] = detail::regression_slope(prefix_lens, log2_means);
  if (!all_succeeded) manifest.status = RunStatus::flagged;
  detail::finalize(manifest, out_dir, clock);
  return manifest;
}

// Hypersphere intrinsic-dimension suite (exact projection pipeline) or
// k-NN difference vectors over a CSV point cloud.
inline RunManifest run_iddim(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const IddimConfig& c = *cfg.iddim;
  detail::Stopwatch clock;
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.kind = "iddim";
  manifest.seed = cfg.seed;
  manifest.config_snapshot = cfg.snapshot;

  iddim::EstimatorConfig estimator;
  estimator.relative_threshold = c.relative_threshold;
  Rng base(cfg.seed);

  if (!c.cloud_csv.empty()) {
    const auto table = read_numeric_csv(c.cloud_csv);
    std::vector<Vec> cloud;
    for (const auto& row : table.rows) cloud.push_back(row);
    CsvWriter csv((out_dir / "estimates.csv").string(),
                  {"center_id", "raw_d", "rounded_d", "method"});
    manifest.outputs.push_back("estimates.csv");
    for (std::size_t center : c.cloud_centers) {
      const auto nbhd = iddim::knn_neighborhood(cloud, center, c.cloud_neighbors);
      const auto est = iddim::estimate_intrinsic_dim(nbhd, estimator);
      csv.row_strings({std::to_string(center), std::to_string(est.raw),
                       std::to_string(est.rounded), est.method});
      manifest.metrics["raw_d_center" + std::to_string(center)] = est.raw;
    }
  } else {
    CsvWriter csv((out_dir / "sphere_suite.csv").string(),
                  {"ambient", "intrinsic", "samples", "sigma", "raw_d", "rounded_d",
                   "gap_index"});
    manifest.outputs.push_back("sphere_suite.csv");
    for (const auto& row : c.suite) {
      Rng rng = base.split();
      // The unit sphere of manifold dimension d spans a (d+1)-dimensional
      // subspace.
      const auto sphere = manifold::HypersphereSpec::random(row.intrinsic + 1, row.ambient, rng);
      const std::size_t samples =
          row.samples ? row.samples
                      : std::max<std::size_t>(4 * static_cast<std::size_t>(row.ambient),
                                              300 * static_cast<std::size_t>(row.intrinsic));
      const double sigma = (row.sigma > 0.0) ? row.sigma : (row.intrinsic > 20 ? 0.02 : 0.05);
      const Vec center = sphere.sample(rng);
      const auto nbhd = iddim::local_neighborhood(
          [&sphere](const Vec& x) { return sphere.project(x); }, center, sigma, samples, rng);
      const auto est = iddim::estimate_intrinsic_dim(nbhd, estimator);
      csv.row({static_cast<double>(row.ambient), static_cast<double>(row.intrinsic),
               static_cast<double>(samples), sigma, est.raw, static_cast<double>(est.rounded),
               static_cast<double>(est.spectral_gap_index)});
      const std::string tag =
          "_n" + std::to_string(row.ambient) + "_d" + std::to_string(row.intrinsic);
      manifest.metrics["raw_d" + tag] = est.raw;
      manifest.metrics["rounded_d" + tag] = est.rounded;
      manifest.metrics["gap_d" + tag] = est.spectral_gap_index;
    }
  }
  detail::finalize(manifest, out_dir, clock);
  return manifest;
}

// Coupon-collector CDF export plus the packing/covering duality check on
// random clouds.
inline RunManifest run_geometry(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const GeometryConfig& c = *cfg.geometry;
  detail::Stopwatch clock;
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.kind = "geometry";
  manifest.seed = cfg.seed;
  manifest.config_snapshot = cfg.snapshot;

  Rng rng(cfg.seed);
  const auto coupon = geom::coupon_collector_sim(c.coupon_bins, c.coupon_trials, rng);
  {
    CsvWriter csv((out_dir / "coupon_cdf.csv").string(), {"stop_time", "cdf"});
    for (std::size_t i = 0; i < coupon.stop_times.size(); ++i) {
      csv.row({static_cast<double>(coupon.stop_times[i]),
               static_cast<double>(i + 1) / static_cast<double>(coupon.stop_times.size())});
    }
  }
  manifest.outputs.push_back("coupon_cdf.csv");
  const double exact = static_cast<double>(c.coupon_bins) *
                       geom::harmonic_number(c.coupon_bins);
  manifest.metrics["coupon_mean"] = coupon.mean_stop_time;
  manifest.metrics["coupon_exact_n_Hn"] = exact;
  manifest.metrics["coupon_relative_error"] =
      std::abs(coupon.mean_stop_time - exact) / exact;

  bool all_hold = true;
  {
    CsvWriter csv((out_dir / "duality.csv").string(),
                  {"cloud", "epsilon", "packing_2eps", "cover_2eps", "packing_eps", "holds"});
    for (int cloud = 0; cloud < c.duality_clouds; ++cloud) {
      std::vector<Vec> points;
      const int dim = 2 + cloud % 3;
      for (int i = 0; i < c.cloud_size; ++i) {
        Vec p(static_cast<std::size_t>(dim));
        for (double& v : p) v = rng.uniform();
        points.push_back(std::move(p));
      }
      const auto report = geom::duality_report(points, c.epsilon);
      all_hold = all_hold && report.duality_holds();
      csv.row({static_cast<double>(cloud), report.epsilon,
               static_cast<double>(report.packing_size_coarse),
               static_cast<double>(report.cover_size),
               static_cast<double>(report.packing_size), report.duality_holds() ? 1.0 : 0.0});
    }
  }
  manifest.outputs.push_back("duality.csv");
  manifest.metrics["duality_all_hold"] = all_hold ? 1.0 : 0.0;
  if (!all_hold || manifest.metrics["coupon_relative_error"] > 0.10)
    manifest.status = RunStatus::flagged;
  detail::finalize(manifest, out_dir, clock);
  return manifest;
}

// Point-cloud emission for downstream tools (and the iddim cloud mode).
inline RunManifest run_generate(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const GenerateConfig& c = *cfg.generate;
  detail::Stopwatch clock;
  fs::create_directories(out_dir);
  RunManifest manifest;
  manifest.kind = "generate";
  manifest.seed = cfg.seed;
  manifest.config_snapshot = cfg.snapshot;

  Rng rng(cfg.seed);
  PointSampler sampler;
  std::size_t dim = 0;
  if (c.source == "manifold") {
    const manifold::ManifoldSpec spec(c.reach, c.intrinsic_dim, c.code_bits);
    dim = spec.ambient_dim();
    sampler = manifold::make_sampler(spec);
    io::write_json_atomic((out_dir / "manifold_spec.json").string(),
                          io::manifold_spec_to_json(spec));
    manifest.outputs.push_back("manifold_spec.json");
  } else if (c.source == "hypersphere") {
    const auto sphere = manifold::HypersphereSpec::random(c.sphere_dim, c.ambient_dim, rng);
    dim = static_cast<std::size_t>(c.ambient_dim);
    sampler = manifold::make_sampler(sphere);
  } else {
    throw std::runtime_error("generate: unknown source '" + c.source + "'");
  }

  std::vector<std::string> header;
  for (std::size_t i = 0; i < dim; ++i) header.push_back("x" + std::to_string(i));
  CsvWriter csv((out_dir / "points.csv").string(), header);
  for (std::size_t i = 0; i < c.count; ++i) csv.row(sampler(rng));
  manifest.outputs.push_back("points.csv");
  manifest.metrics["count"] = static_cast<double>(c.count);
  manifest.metrics["ambient_dim"] = static_cast<double>(dim);
  detail::finalize(manifest, out_dir, clock);
  return manifest;
}

inline RunManifest run(const ExperimentConfig& cfg, const fs::path& out_dir) {
  if (cfg.kind == "learnable") return run_learnable(cfg, out_dir);
  if (cfg.kind == "hard") return run_hard(cfg, out_dir);
  if (cfg.kind == "sq") return run_sq(cfg, out_dir);
  if (cfg.kind == "iddim") return run_iddim(cfg, out_dir);
  if (cfg.kind == "geometry") return run_geometry(cfg, out_dir);
  if (cfg.kind == "generate") return run_generate(cfg, out_dir);
  throw std::runtime_error("run: unknown kind '" + cfg.kind + "'");
}

// Aggregates summary.json metrics across runs (median/mean/min/max per
// metric name). Aggregation lives here, outside any single run.
inline void summarize_runs(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::map<std::string, std::vector<double>> metric_values;
  std::size_t loaded = 0;
  for (const auto& dir : run_dirs) {
    const auto path = dir / "summary.json";
    const auto j = io::load_json_file(path.string());
    ++loaded;
    for (const auto& [name, value] : j.at("metrics").items())
      metric_values[name].push_back(value.get<double>());
  }
  if (loaded == 0) throw std::runtime_error("summarize: no runs given");

  io::json out;
  out["runs"] = loaded;
  CsvWriter csv((out_dir / "aggregate.csv").string(),
                {"metric", "count", "mean", "median", "min", "max"});
  for (auto& [name, values] : metric_values) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double med = median(values);
    const double mu = mean(values);
    out["metrics"][name] =
        io::json{{"count", values.size()}, {"mean", mu},     {"median", med},
                 {"min", sorted.front()},  {"max", sorted.back()}};
    csv.row_strings({name, std::to_string(values.size()), std::to_string(mu),
                     std::to_string(med), std::to_string(sorted.front()),
                     std::to_string(sorted.back())});
  }
  io::write_json_atomic((out_dir / "aggregate.json").string(), out);
}

}  // namespace mlab::experiments
