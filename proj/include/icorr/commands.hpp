#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icorr/run_config.hpp"

namespace icorr {

// Flag overrides; flags win over the config file.
struct CommandOverrides {
  std::optional<uint64_t> seed;
  std::optional<int> stage;            // run a single training stage
  std::optional<std::string> from;     // checkpoint to start from / infer with
  std::vector<std::string> ablate;     // cross-loss terms to zero: cd emd nor smo
  std::optional<double> tau;
  std::optional<int> query_point;
  std::optional<int> frames;
};

void apply_overrides(RunConfig& config, const CommandOverrides& o);

// Each command validates the config up front, then writes only under the
// configured directories. Errors surface as ConfigError / DataError /
// IoError; main() maps them to exit codes.
void cmd_sample(const RunConfig& config);
void cmd_train(const RunConfig& config, const CommandOverrides& o);
void cmd_infer(const RunConfig& config, const CommandOverrides& o, int source, int target);
void cmd_eval(const RunConfig& config, const CommandOverrides& o);
void cmd_export(const RunConfig& config, const CommandOverrides& o);

}  // namespace icorr
