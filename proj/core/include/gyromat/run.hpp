#pragma once

#include <filesystem>
#include <vector>

#include "gyromat/config.hpp"
#include "gyromat/train.hpp"

namespace gyromat {

struct RunSummary {
  std::vector<nn::EpochRecord> records;
  // Final parameters (the restored ones for the GCN), evaluation mode.
  std::vector<std::pair<std::string, nn::EvalResult>> splits;
  double test_accuracy = 0.0;
};

// Loads data and trains. Nothing is written until training has finished:
// out_dir then receives checkpoint/, metrics.csv, timing.csv and config.txt
// (the resolved configuration).
RunSummary run_training(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        const nn::EpochCallback& on_epoch = {});

// Rebuilds the model from out_dir/checkpoint and evaluates every split.
RunSummary run_evaluation(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace gyromat
