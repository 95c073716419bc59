#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mlab/experiments.hpp"

using namespace mlab;
namespace xp = mlab::experiments;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("mlab_test_out") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

xp::ExperimentConfig config_from_string(const std::string& text) {
  return xp::parse_config_json(io::json::parse(text), text);
}

std::string file_bytes(const fs::path& p) { return io::read_text_file(p.string()); }

}  // namespace

TEST_CASE("manifold spec JSON round-trip recomputes derived fields") {
  const manifold::ManifoldSpec spec(0.7, 2, 6);
  const auto j = io::manifold_spec_to_json(spec);
  const auto back = io::manifold_spec_from_json(j);
  CHECK(back.reach_bound() == spec.reach_bound());
  CHECK(back.repeat_count() == spec.repeat_count());
  CHECK(back.ambient_dim() == spec.ambient_dim());

  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS(io::manifold_spec_from_json(bad));
  auto invalid = j;
  invalid["code_bits"] = 1;
  CHECK_THROWS_AS(io::manifold_spec_from_json(invalid), std::domain_error);
}

TEST_CASE("hard target spec JSON round-trip") {
  const manifold::ManifoldSpec ms(0.5, 1, 8);
  const targets::HardTargetSpec spec(ms, targets::ParitySubset({0, 3}, 4));
  const auto j = io::hard_target_spec_to_json(spec);
  const auto back = io::hard_target_spec_from_json(j);
  CHECK(back.truncation == 4);
  CHECK(back.subset == spec.subset);

  auto corrupt = j;
  corrupt["truncation"] = 3;
  CHECK_THROWS(io::hard_target_spec_from_json(corrupt));
}

TEST_CASE("network checkpoints restore the exact function") {
  Rng rng(5);
  auto net = nn::random_network(6, {10, 4}, nn::BiasPlacement::inside_relu, rng);
  for (auto& layer : net.layers())
    for (double& b : layer.bias) b = rng.normal();
  const auto j = io::network_to_json(net);
  const auto back = io::network_from_json(j);
  CHECK(back.placement() == net.placement());
  for (int i = 0; i < 100; ++i) {
    Vec x(6);
    for (double& c : x) c = rng.normal();
    CHECK(back.forward(x) == net.forward(x));
  }

  auto corrupt = j;
  corrupt["layers"][0]["weights"] = std::vector<double>{1.0};
  CHECK_THROWS(io::network_from_json(corrupt));
}

TEST_CASE("epsilon net and interpolation model JSON round-trip") {
  Rng rng(6);
  LabeledSampler circle = [](Rng& r) {
    const double th = r.uniform(0.0, 2.0 * manifold::kPi);
    return LabeledSample{{std::cos(th), std::sin(th)}, th};
  };
  const auto net = geom::build_net(circle, 0.3, 0.05, 50000, rng);
  REQUIRE(net.certification.certified);
  const auto back = io::epsilon_net_from_json(io::epsilon_net_to_json(net));
  CHECK(back.anchors.size() == net.anchors.size());
  CHECK(back.certification.trials == net.certification.trials);
  CHECK(back.epsilon == net.epsilon);
  for (std::size_t i = 0; i < net.anchors.size(); ++i)
    CHECK(back.anchors[i].x == net.anchors[i].x);

  learner::InterpolationModel model;
  model.net = net;
  model.lipschitz_bound = 2.5;
  model.target_error = 0.75;
  const auto mj = io::interpolation_model_to_json(model);
  const auto mback = io::interpolation_model_from_json(mj);
  CHECK(mback.lipschitz_bound == 2.5);
  CHECK(mback.radius() == model.radius());
}

TEST_CASE("config parsing fails fast on typos") {
  CHECK_THROWS(config_from_string(R"({"kind":"geometry"})"));  // missing seed
  CHECK_THROWS(config_from_string(R"({"kind":"geometry","seed":1,"geometrie":{}})"));
  CHECK_THROWS(config_from_string(R"({"kind":"geometry","seed":1,"hard":{}})"));
  CHECK_THROWS(config_from_string(
      R"({"kind":"geometry","seed":1,"geometry":{"coupon_binz":3}})"));
  CHECK_THROWS(config_from_string(R"({"kind":"warp","seed":1})"));

  const auto ok = config_from_string(
      R"({"kind":"geometry","seed":9,"geometry":{"coupon_bins":10}})");
  CHECK(ok.kind == "geometry");
  CHECK(ok.seed == 9);
  CHECK(ok.geometry->coupon_bins == 10);
  CHECK(ok.geometry->coupon_trials == 1000);  // default preserved
}

TEST_CASE("geometry runs are reproducible and well-formed") {
  const auto cfg = config_from_string(
      R"({"kind":"geometry","seed":11,"geometry":{"coupon_bins":40,"coupon_trials":200,
          "duality_clouds":4,"cloud_size":200,"epsilon":0.1}})");
  const auto dir_a = fresh_dir("geometry_a");
  const auto dir_b = fresh_dir("geometry_b");
  const auto manifest = xp::run(cfg, dir_a);
  xp::run(cfg, dir_b);

  CHECK(manifest.status == xp::RunStatus::ok);
  CHECK(manifest.metrics.at("duality_all_hold") == 1.0);
  CHECK(manifest.metrics.at("coupon_relative_error") <= 0.10);
  CHECK(fs::exists(dir_a / "coupon_cdf.csv"));
  CHECK(fs::exists(dir_a / "duality.csv"));
  CHECK(fs::exists(dir_a / "manifest.json"));
  CHECK(fs::exists(dir_a / "summary.json"));

  // Same config + seed: byte-identical CSVs.
  CHECK(file_bytes(dir_a / "coupon_cdf.csv") == file_bytes(dir_b / "coupon_cdf.csv"));
  CHECK(file_bytes(dir_a / "duality.csv") == file_bytes(dir_b / "duality.csv"));

  // Manifest carries the exact config bytes.
  const auto mj = io::load_json_file((dir_a / "manifest.json").string());
  CHECK(mj.at("config_snapshot").get<std::string>() == cfg.snapshot);
  CHECK(mj.at("artifact_version").get<std::string>() == std::string(MLAB_VERSION));
}

TEST_CASE("sq runner produces the scaling slope") {
  const auto cfg = config_from_string(
      R"({"kind":"sq","seed":3,"sq":{"code_bits_grid":[4,6,8],"seeds_per_size":20}})");
  const auto dir = fresh_dir("sq");
  const auto manifest = xp::run(cfg, dir);
  CHECK(manifest.status == xp::RunStatus::ok);
  CHECK(fs::exists(dir / "sq_scan.csv"));
  const double slope = manifest.metrics.at("log2_queries_slope");
  CHECK(slope >= 0.6);
  CHECK(slope <= 1.4);
  for (int nb : {4, 6, 8})
    CHECK(manifest.metrics.at("success_rate_nb" + std::to_string(nb)) == 1.0);
}

TEST_CASE("iddim sphere suite lands near the true dimensions") {
  const auto cfg = config_from_string(
      R"({"kind":"iddim","seed":5,"iddim":{"suite":[
            {"ambient":20,"intrinsic":2},
            {"ambient":20,"intrinsic":10}]}})");
  const auto dir = fresh_dir("iddim");
  const auto manifest = xp::run(cfg, dir);
  CHECK(fs::exists(dir / "sphere_suite.csv"));
  CHECK(manifest.metrics.at("rounded_d_n20_d2") >= 2);
  CHECK(manifest.metrics.at("rounded_d_n20_d2") <= 4);
  CHECK(manifest.metrics.at("rounded_d_n20_d10") >= 8);
  CHECK(manifest.metrics.at("rounded_d_n20_d10") <= 12);
}

TEST_CASE("generate feeds the iddim cloud mode") {
  const auto gen_cfg = config_from_string(
      R"({"kind":"generate","seed":8,"generate":{"source":"hypersphere","sphere_dim":3,
          "ambient_dim":8,"count":3000}})");
  const auto gen_dir = fresh_dir("generate");
  const auto gen_manifest = xp::run(gen_cfg, gen_dir);
  CHECK(gen_manifest.metrics.at("count") == 3000.0);
  REQUIRE(fs::exists(gen_dir / "points.csv"));

  const std::string cloud_path = (gen_dir / "points.csv").string();
  const std::string iddim_text =
      std::string(R"({"kind":"iddim","seed":9,"iddim":{"cloud_csv":")") + cloud_path +
      R"(","cloud_neighbors":150,"cloud_centers":[0,5]}})";
  const auto id_cfg = config_from_string(iddim_text);
  const auto id_dir = fresh_dir("iddim_cloud");
  const auto manifest = xp::run(id_cfg, id_dir);
  REQUIRE(fs::exists(id_dir / "estimates.csv"));
  // S^2 cloud: the local estimate sits near 2.
  CHECK(manifest.metrics.at("raw_d_center0") >= 1.4);
  CHECK(manifest.metrics.at("raw_d_center0") <= 3.6);
}

TEST_CASE("tiny learnable run completes, replays identically, and reports metrics") {
  const std::string text =
      R"({"kind":"learnable","seed":21,"learnable":{"ambient_grid":[8],"sphere_dim":4,
          "train_size":200,"test_size":200,"student_width":16,"steps":300,
          "batch_size":32,"base_lr":0.003}})";
  const auto cfg = config_from_string(text);
  const auto dir_a = fresh_dir("learnable_a");
  const auto dir_b = fresh_dir("learnable_b");
  const auto manifest = xp::run(cfg, dir_a);
  xp::run(cfg, dir_b);
  CHECK(fs::exists(dir_a / "trace_n8.csv"));
  CHECK(file_bytes(dir_a / "trace_n8.csv") == file_bytes(dir_b / "trace_n8.csv"));
  CHECK(manifest.metrics.count("final_rel_mse_n8") == 1);
  CHECK(manifest.metrics.at("target_width_n8") == 2.0);  // ceil(8/4)
  const double c = manifest.metrics.at("lr_multiplier_n8");
  CHECK(c >= -2.0);
  CHECK(c <= 1.0);

  // The emitted target checkpoint restores the exact labeling function.
  const auto target = io::network_from_json(
      io::load_json_file((dir_a / "target_n8.json").string()));
  CHECK(target.input_dim() == 8);
  CHECK(target.layers()[0].weights.rows() == 2);

  // An untrained run sits at relative MSE near 1.
  const auto zero_cfg = config_from_string(
      R"({"kind":"learnable","seed":21,"learnable":{"ambient_grid":[8],"sphere_dim":4,
          "train_size":200,"test_size":400,"student_width":16,"steps":0,
          "batch_size":32,"base_lr":0.003}})");
  const auto zero = xp::run(zero_cfg, fresh_dir("learnable_zero"));
  CHECK(zero.metrics.at("final_rel_mse_n8") == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("tiny hard run completes and learns the smallest instance") {
  const auto cfg = config_from_string(
      R"({"kind":"hard","seed":31,"hard":{"code_bits_grid":[4],"steps":1500,
          "batch_size":64,"test_size":400}})");
  const auto dir = fresh_dir("hard");
  const auto manifest = xp::run(cfg, dir);
  CHECK(fs::exists(dir / "trace_nb4.csv"));
  CHECK(manifest.metrics.at("final_rel_mse_nb4") <= 0.25);
}

TEST_CASE("hard run supports the deep overparameterized student") {
  const auto cfg = config_from_string(
      R"({"kind":"hard","seed":32,"hard":{"code_bits_grid":[4],"depth":3,"subset":"full",
          "steps":400,"batch_size":32,"test_size":300}})");
  const auto manifest = xp::run(cfg, fresh_dir("hard_deep"));
  CHECK(manifest.metrics.count("final_rel_mse_nb4") == 1);
  CHECK(manifest.status == xp::RunStatus::ok);
}

TEST_CASE("divergent runs finish with a flagged status") {
  const auto cfg = config_from_string(
      R"({"kind":"learnable","seed":33,"learnable":{"ambient_grid":[8],"sphere_dim":4,
          "train_size":100,"test_size":100,"student_width":8,"steps":50,
          "batch_size":16,"base_lr":1e150,"optimizer":"sgd"}})");
  const auto manifest = xp::run(cfg, fresh_dir("diverged"));
  CHECK(manifest.status == xp::RunStatus::flagged);
  CHECK(manifest.metrics.count("diverged_n8") == 1);
}

TEST_CASE("summarize aggregates metrics across runs") {
  const auto base = config_from_string(
      R"({"kind":"geometry","seed":1,"geometry":{"coupon_bins":20,"coupon_trials":150,
          "duality_clouds":2,"cloud_size":150,"epsilon":0.1}})");
  std::vector<fs::path> dirs;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    auto cfg = base;
    cfg.seed = seed;
    const auto dir = fresh_dir("summ_" + std::to_string(seed));
    xp::run(cfg, dir);
    dirs.push_back(dir);
  }
  const auto out = fresh_dir("aggregate");
  xp::summarize_runs(dirs, out);
  REQUIRE(fs::exists(out / "aggregate.json"));
  REQUIRE(fs::exists(out / "aggregate.csv"));
  const auto j = io::load_json_file((out / "aggregate.json").string());
  CHECK(j.at("runs").get<int>() == 3);
  const auto& coupon = j.at("metrics").at("coupon_mean");
  CHECK(coupon.at("count").get<int>() == 3);
  CHECK(coupon.at("min").get<double>() <= coupon.at("median").get<double>());
  CHECK(coupon.at("median").get<double>() <= coupon.at("max").get<double>());
}
