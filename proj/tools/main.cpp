// Experiment runner for the manifold learnability lab. Every subcommand
// takes a JSON config, a mandatory seed (from the config or --seed), and an
// output directory; runs write trace/summary CSVs plus an atomic
// manifest.json and are bit-reproducible from (config, seed, version).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlab/experiments.hpp"

namespace {

namespace xp = mlab::experiments;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "seed override (otherwise from the config)");
}

int run_with_kind(const CommonArgs& args, const std::string& expected_kind) {
  auto cfg = xp::load_config(args.config_path, args.seed);
  if (cfg.kind != expected_kind)
    throw std::runtime_error("config kind '" + cfg.kind + "' does not match subcommand '" +
                             expected_kind + "'");
  const auto manifest = xp::run(cfg, args.out_dir);
  return manifest.status == xp::RunStatus::ok ? 0 : 2;
}

std::string subcommand_for_kind(const std::string& kind) {
  if (kind == "learnable") return "train-learnable";
  if (kind == "hard") return "train-hard";
  return kind;  // sq, iddim, geometry, generate map to themselves
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manifold learnability lab"};
  app.require_subcommand(1);

  CommonArgs generate_args, learnable_args, hard_args, sq_args, iddim_args, geometry_args;
  add_common(app.add_subcommand("generate", "emit a sampled point cloud"), generate_args);
  add_common(app.add_subcommand("train-learnable", "hypersphere + random target training"),
             learnable_args);
  add_common(app.add_subcommand("train-hard", "space-filling-curve parity training"),
             hard_args);
  add_common(app.add_subcommand("sq", "adversarial statistical-query scan experiment"),
             sq_args);
  add_common(app.add_subcommand("iddim", "intrinsic dimension estimation"), iddim_args);
  add_common(app.add_subcommand("geometry", "coupon collector and cover/packing checks"),
             geometry_args);

  auto* summarize = app.add_subcommand("summarize", "aggregate metrics across runs");
  std::vector<std::string> summarize_dirs;
  std::string summarize_out;
  summarize->add_option("runs", summarize_dirs, "run directories with summary.json")
      ->required()
      ->expected(-1);
  summarize->add_option("--out", summarize_out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "run one config across disjoint seeds");
  std::string sweep_config, sweep_out;
  std::uint64_t sweep_base_seed = 0;
  int sweep_count = 5;
  bool sweep_seed_given = false;
  sweep->add_option("--config", sweep_config, "JSON experiment config")->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--seeds", sweep_count, "number of runs")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sweep_base_seed, "base seed (otherwise from the config)")
      ->each([&](const std::string&) { sweep_seed_given = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) return run_with_kind(generate_args, "generate");
    if (app.got_subcommand("train-learnable")) return run_with_kind(learnable_args, "learnable");
    if (app.got_subcommand("train-hard")) return run_with_kind(hard_args, "hard");
    if (app.got_subcommand("sq")) return run_with_kind(sq_args, "sq");
    if (app.got_subcommand("iddim")) return run_with_kind(iddim_args, "iddim");
    if (app.got_subcommand("geometry")) return run_with_kind(geometry_args, "geometry");

    if (app.got_subcommand("summarize")) {
      std::vector<xp::fs::path> dirs(summarize_dirs.begin(), summarize_dirs.end());
      xp::summarize_runs(dirs, summarize_out);
      return 0;
    }

    if (app.got_subcommand("sweep")) {
      const auto base_cfg = xp::load_config(sweep_config);
      const std::uint64_t base_seed = sweep_seed_given ? sweep_base_seed : base_cfg.seed;
      const std::string subcommand = subcommand_for_kind(base_cfg.kind);
      xp::fs::create_directories(sweep_out);
      int exit_code = 0;
      mlab::io::json children = mlab::io::json::array();
      for (int i = 0; i < sweep_count; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        const std::string child_out = sweep_out + "/run_" + std::to_string(i);
        const std::string command = std::string("\"") + argv[0] + "\" " + subcommand +
                                    " --config \"" + sweep_config + "\" --seed " +
                                    std::to_string(seed) + " --out \"" + child_out + "\"";
        const int raw = std::system(command.c_str());
        const int code = (raw < 0) ? 1 : WEXITSTATUS(raw);
        children.push_back({{"dir", child_out}, {"seed", seed}, {"exit_code", code}});
        if (code != 0 && code != 2) return 1;
        if (code == 2) exit_code = 2;
      }
      mlab::io::write_json_atomic(sweep_out + "/sweep_manifest.json",
                                  {{"config", sweep_config},
                                   {"base_seed", base_seed},
                                   {"runs", children}});
      return exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
