#pragma once

#include <cstdint>

#include "dsn/config.hpp"

namespace dsn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;

// Pinned so the stock gradcheck run is reproducible; arbitrary seeds keep
// the same tolerances and may show rare statistical excursions.
inline constexpr std::uint64_t kDefaultGradcheckSeed = 1;

// Commands take a finalized config (CLI overrides already applied) and
// throw ConfigError / IoError / FormatError; run_cli maps those to exit
// codes 2 / 3 / 3.
int cmd_gen(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_eval(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_gradcheck(std::uint64_t seed, bool corrupt = false);

int run_cli(int argc, const char* const* argv);

}  // namespace dsn
