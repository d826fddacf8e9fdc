#include <iostream>

#include "CLI11.hpp"
#include "icorr/commands.hpp"

namespace {

// 0 success, 2 config error, 3 data error, 4 runtime error.
int run(int argc, char** argv) {
  CLI::App app{"Unsupervised dense 3D shape correspondence via branched implicit functions"};
  app.require_subcommand(1);

  std::string config_path;
  icorr::CommandOverrides o;
  uint64_t seed = 0;
  int stage = 0;
  std::string from;
  double tau = 0;
  int query_point = -1;
  int frames = 0;
  int source = 0, target = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration JSON")->required();
    cmd->add_option("--seed", seed, "Override every seed in the config");
    return cmd;
  };

  auto* sample = add_common(app.add_subcommand("sample", "Build the shape corpus on disk"));
  auto* train = add_common(app.add_subcommand("train", "Run the three-stage training"));
  train->add_option("--stage", stage, "Run a single stage (1, 2, or 3)")
      ->check(CLI::Range(1, 3));
  train->add_option("--from", from, "Checkpoint directory to start from");
  train->add_option("--ablate", o.ablate, "Cross-loss terms to zero (cd emd nor smo)");
  auto* infer = add_common(app.add_subcommand("infer", "Dense correspondence between two shapes"));
  infer->add_option("source", source, "Source shape index")->required();
  infer->add_option("target", target, "Target shape index")->required();
  infer->add_option("--from", from, "Checkpoint directory (default: ckpt_stage3)");
  infer->add_option("--tau", tau, "Confidence threshold override");
  infer->add_option("--query-point", query_point, "Source point index for a confidence map");
  infer->add_option("--frames", frames, "Interpolation frame count N (emits N+1 frames)");
  auto* eval = add_common(app.add_subcommand("eval", "Metrics report for a trained checkpoint"));
  eval->add_option("--from", from, "Checkpoint directory (default: ckpt_stage3)");
  auto* exp = add_common(app.add_subcommand("export", "Reconstructed meshes and PEV dumps"));
  exp->add_option("--from", from, "Checkpoint directory (default: ckpt_stage3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    icorr::RunConfig config;
    try {
      config = icorr::load_run_config(config_path);
    } catch (const icorr::IoError& e) {
      // An unreadable --config is a configuration problem, not a runtime one.
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    for (auto* cmd : {sample, train, infer, eval, exp})
      if (cmd->parsed() && cmd->count("--seed")) o.seed = seed;
    if (train->count("--stage")) o.stage = stage;
    if (!from.empty()) o.from = from;
    if (infer->count("--tau")) o.tau = tau;
    if (query_point >= 0) o.query_point = query_point;
    if (frames > 0) o.frames = frames;
    icorr::apply_overrides(config, o);

    if (sample->parsed())
      icorr::cmd_sample(config);
    else if (train->parsed())
      icorr::cmd_train(config, o);
    else if (infer->parsed())
      icorr::cmd_infer(config, o, source, target);
    else if (eval->parsed())
      icorr::cmd_eval(config, o);
    else if (exp->parsed())
      icorr::cmd_export(config, o);
    return 0;
  } catch (const icorr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const icorr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
