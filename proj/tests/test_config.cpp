#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "icorr/run_config.hpp"

using namespace icorr;

TEST_CASE("defaults follow the reference training recipe") {
  RunConfig cfg = parse_run_config(R"({"corpus": {"family": "table"}})");
  CHECK(cfg.corpus.surface_points == 8192);
  CHECK(cfg.corpus.resolutions == std::vector<int>{16, 32, 64});
  CHECK(cfg.training.network.d == 256);
  CHECK(cfg.training.network.k == 12);
  CHECK(cfg.training.learning_rate == 1e-4);
  CHECK(cfg.training.weights.cd == 10.0);
  CHECK(cfg.training.weights.emd == 1.0);
  CHECK(cfg.training.weights.nor == 0.01);
  CHECK(cfg.training.weights.smo == 0.1);
  CHECK(cfg.inference.tau == 0.2);
  CHECK(cfg.evaluation.threshold_max == 0.25);
  CHECK(cfg.evaluation.threshold_step == 0.01);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("unknown keys are rejected at every nesting level") {
  CHECK_THROWS_AS(parse_run_config(R"({"corpus": {"family": "table"}, "oops": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"corpus": {"family": "table", "oops": 1}})"), ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"corpus": {"family": "table"}, "training": {"oops": 1}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"corpus": {"family": "table"}, "network": {"oops": 1}})"),
      ConfigError);
  try {
    parse_run_config(R"({"corpus": {"family": "table", "shoes": 2}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    // The message names the offending key.
    CHECK(std::string(e.what()).find("shoes") != std::string::npos);
  }
}

TEST_CASE("validation rules") {
  // Exactly one of family / mesh_dir.
  CHECK_THROWS_AS(parse_run_config(R"({"corpus": {}})").validate(), ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"corpus": {"family": "table", "mesh_dir": "x"}})").validate(),
      ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"corpus": {"family": "airplane"}})").validate(),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"corpus": {"family": "table"}, "inference": {"tau": 1.5}})").validate(),
      ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"corpus": {"family": "table"}, "inference": {"grid_resolution": 4}})")
          .validate(),
      ConfigError);
  CHECK_NOTHROW(parse_run_config(R"({"corpus": {"mesh_dir": "meshes"}})").validate());
}

TEST_CASE("explicit values round trip through serialization") {
  RunConfig cfg = parse_run_config(R"({
    "corpus": {"family": "chair", "count": 7, "surface_points": 512, "seed": 9},
    "network": {"d": 32, "k": 6},
    "training": {"learning_rate": 0.002, "stage3_iterations": 123,
                 "weights": {"cd": 5.0},
                 "toggles": {"smo": false}},
    "inference": {"tau": 0.4, "grid_resolution": 16},
    "evaluation": {"threshold_max": 0.1, "threshold_step": 0.02},
    "paths": {"dataset_dir": "d", "checkpoint_dir": "c", "output_dir": "o"}
  })");
  CHECK(cfg.corpus.family == "chair");
  CHECK(cfg.corpus.count == 7);
  CHECK(cfg.training.learning_rate == 0.002);
  CHECK(cfg.training.network.d == 32);
  CHECK(cfg.training.weights.cd == 5.0);
  CHECK_FALSE(cfg.training.toggles.smo);
  CHECK(cfg.inference.tau == 0.4);
  CHECK(cfg.paths.output_dir == "o");

  RunConfig back = parse_run_config(run_config_to_json(cfg));
  CHECK(run_config_to_json(back) == run_config_to_json(cfg));
  CHECK(back.corpus.seed == 9);
  CHECK(back.training.stage3_iterations == 123);
  CHECK_FALSE(back.training.toggles.smo);
}

TEST_CASE("eval threshold grid") {
  RunConfig cfg = parse_run_config(
      R"({"corpus": {"family": "table"}, "evaluation": {"threshold_max": 0.05, "threshold_step": 0.01}})");
  auto t = cfg.eval_thresholds();
  REQUIRE(t.size() == 6);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == doctest::Approx(0.05));
}

TEST_CASE("load_run_config reads files and maps errors") {
  auto dir = std::filesystem::temp_directory_path() / "icorr_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "ok.json");
    f << R"({"corpus": {"family": "table"}})";
  }
  CHECK(load_run_config(dir / "ok.json").corpus.family == "table");
  {
    std::ofstream f(dir / "bad.json");
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}
