#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gyromat/csv.hpp"
#include "gyromat/gyro_spd.hpp"

namespace gyromat {

enum class ModelKind { Spd, Spsd, GrGcn, GrGcnOnb };

std::string_view to_string(ModelKind k);
ModelKind parse_model(std::string_view s);

// Flat key=value run description. Defaults depend on the model kind.
struct RunConfig {
  ModelKind model = ModelKind::Spd;
  std::uint64_t seed = 42;
  int epochs = 100;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  int patience = 0;

  // SPD pipeline
  spd::SpdMetric conv_metric{spd::Metric::AI, 0.0};
  spd::SpdMetric mlr_metric{spd::Metric::LE, 0.0};
  double lambda = 1.0;
  double gamma = 0.1;
  Index n = 8;
  Index m = 4;
  Index p = 2;
  Index window = 1;
  Index stride = 1;

  // synthetic | sequences | timeseries (SPD models); synthetic | graph (GCN)
  std::string data = "synthetic";
  std::filesystem::path data_dir;
  std::filesystem::path edges, features, labels;
  std::uint64_t data_seed = 42;
  int classes = 3;
  int per_class = 100;
  std::size_t train_size = 200;
  double sigma = 0.1;

  // timeseries ingestion
  Index frame_rows = 1;
  Index series_window = 2;
  Index series_stride = 1;
  int pyramid = 1;

  // graph
  Index nodes = 100;
  int communities = 3;
  double p_in = 0.3;
  double p_out = 0.02;
  Index feature_dim = 3;
  double feature_noise = 1.0;
  bool normalize_features = true;
  int layers = 2;
};

bool is_gcn(ModelKind k);

// Throws ConfigError on unknown keys for the model, bad values or missing paths.
RunConfig parse_run_config(const KeyValues& kv);
RunConfig load_run_config(const std::filesystem::path& path);
KeyValues to_key_values(const RunConfig& cfg);

}  // namespace gyromat
