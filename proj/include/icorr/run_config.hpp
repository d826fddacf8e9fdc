#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icorr/trainer.hpp"

namespace icorr {

struct CorpusConfig {
  std::string family;    // "table" / "chair"; empty when mesh_dir is used
  std::string mesh_dir;  // directory of OBJ/PLY files
  int count = 20;        // synthetic shapes to generate
  int surface_points = 8192;
  std::vector<int> resolutions = {16, 32, 64};
  uint64_t seed = 0;
};

struct InferenceConfig {
  double tau = 0.2;
  int grid_resolution = 64;
};

struct EvaluationConfig {
  double threshold_max = 0.25;
  double threshold_step = 0.01;
  int grid_resolution = 32;
  int sample_count = 2048;
};

struct PathsConfig {
  std::filesystem::path dataset_dir = "dataset";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path output_dir = "output";
};

// One JSON document drives a whole run. Unknown keys anywhere are a
// ConfigError; absent keys take the defaults above / in TrainingConfig.
struct RunConfig {
  CorpusConfig corpus;
  TrainingConfig training;  // includes network, weights, toggles
  InferenceConfig inference;
  EvaluationConfig evaluation;
  PathsConfig paths;

  void validate() const;
  std::vector<double> eval_thresholds() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

}  // namespace icorr
