#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gyromat/data.hpp"
#include "gyromat/gcn.hpp"
#include "gyromat/nn.hpp"

namespace gyromat::nn {

struct EpochRecord {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;  // wall time of the epoch, kept out of metrics.csv
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainOptions {
  int epochs = 10;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 0.0;
  // GCN: stop after this many epochs without a lower dev loss (0 = never);
  // the parameters with the lowest dev loss are restored at the end.
  int patience = 0;
  std::uint64_t seed = 42;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam. Records per epoch: "train" (running over the epoch's
// batches) and "test" (evaluation mode after the epoch). Epoch 0 is the
// initial evaluation of both splits.
std::vector<EpochRecord> train_spd(SpdNet& net, const data::SpdDataset& ds, const TrainOptions& opt,
                                   const EpochCallback& on_epoch = {});
EvalResult evaluate_spd(SpdNet& net, const std::vector<data::SpdSample>& samples,
                        std::size_t batch_size = 64);

// Full-batch Adam on the train mask. Records "train", "dev", "test".
// With a non-empty dev split the lowest-dev-loss parameters are restored.
std::vector<EpochRecord> train_gcn(GcnModel& model, const data::Graph& g, const TrainOptions& opt,
                                   const EpochCallback& on_epoch = {});
EvalResult evaluate_gcn(const GcnModel& model, const data::Graph& g, const std::vector<Index>& nodes);

void write_metrics(const std::filesystem::path& path, const std::vector<EpochRecord>& records);
void write_timing(const std::filesystem::path& path, const std::vector<EpochRecord>& records);

}  // namespace gyromat::nn
