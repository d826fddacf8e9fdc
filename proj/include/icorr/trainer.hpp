#pragma once

#include <filesystem>
#include <iosfwd>

#include "icorr/dataset.hpp"
#include "icorr/losses.hpp"
#include "icorr/network.hpp"

namespace icorr {

struct TrainingConfig {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int shapes_per_batch = 16;
  int pairs_per_batch = 4;       // stage 3
  int stage1_iterations = 2000;  // per resolution
  int stage2_iterations = 2000;
  int stage3_iterations = 10000;
  int occ_samples_per_step = 4096;  // random subsample from the active pool
  int surface_points_per_step = 0;  // 0 = use the full surface set
  int encoder_points_per_step = 0;  // 0 = use the full surface set
  uint64_t seed = 0;
  bool preserve_moments_across_resolutions = true;
  int checkpoint_every = 1000;
  LossWeights weights;
  LossToggles toggles;
  LossOptions loss_options() const;
  NetworkConfig network;

  void validate() const;
};

struct TrainingState {
  int stage = 0;
  int resolution = 0;
  int64_t iteration = 0;  // within the current stage
  ParameterStore params;
  std::map<std::string, Eigen::MatrixXd> moments;  // m.<name>, v.<name>, plus step count
  int64_t adam_step = 0;
};

// Stage 1: occupancy only, E and f, progressive resolutions 16 -> 32 -> 64.
TrainingState train_stage1(const Dataset& corpus, const TrainingConfig& config,
                           std::ostream* log = nullptr, TrainingState* initial = nullptr,
                           const std::filesystem::path* checkpoint_dir = nullptr);

// Stage 2: occ + sr, all networks, highest-resolution samples.
TrainingState train_stage2(const Dataset& corpus, const TrainingConfig& config,
                           TrainingState state, std::ostream* log = nullptr,
                           const std::filesystem::path* checkpoint_dir = nullptr);

// Stage 3: full objective over randomly sampled distinct shape pairs.
TrainingState train_stage3(const Dataset& corpus, const TrainingConfig& config,
                           TrainingState state, std::ostream* log = nullptr,
                           const std::filesystem::path* checkpoint_dir = nullptr);

// Runs stages 1 -> 2 -> 3 with stage-boundary and periodic checkpoints.
// Resumes from the newest stage-boundary checkpoint already in
// checkpoint_dir. Returns the final checkpoint path.
std::filesystem::path run_training(const Dataset& corpus, const TrainingConfig& config,
                                   const std::filesystem::path& checkpoint_dir,
                                   std::ostream* log = nullptr);

// Saves/loads TrainingState as a checkpoint container.
void save_state(const TrainingState& state, const std::filesystem::path& dir);
TrainingState load_state(const std::filesystem::path& dir);

}  // namespace icorr
