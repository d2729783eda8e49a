#include "gyromat/config.hpp"

#include <cmath>
#include <set>

#include "gyromat/errors.hpp"

namespace gyromat {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Spd: return "spd";
    case ModelKind::Spsd: return "spsd";
    case ModelKind::GrGcn: return "gr-gcn";
    case ModelKind::GrGcnOnb: return "gr-gcn-onb";
  }
  return "spd";
}

ModelKind parse_model(std::string_view s) {
  if (s == "spd") return ModelKind::Spd;
  if (s == "spsd") return ModelKind::Spsd;
  if (s == "gr-gcn") return ModelKind::GrGcn;
  if (s == "gr-gcn-onb") return ModelKind::GrGcnOnb;
  throw ConfigError("unknown model '" + std::string(s) + "' (spd | spsd | gr-gcn | gr-gcn-onb)");
}

bool is_gcn(ModelKind k) { return k == ModelKind::GrGcn || k == ModelKind::GrGcnOnb; }

namespace {

const std::set<std::string> kCommon{"model", "seed", "epochs", "lr", "weight_decay", "data", "data_seed"};
const std::set<std::string> kSpd{"batch_size", "conv_metric", "conv_beta", "mlr_metric", "mlr_beta",
                                 "n", "m", "window", "stride", "data_dir", "classes", "per_class",
                                 "train_size", "sigma", "frame_rows", "series_window",
                                 "series_stride", "pyramid"};
const std::set<std::string> kSpsd{"lambda", "gamma", "p"};
const std::set<std::string> kGcn{"n", "p", "layers", "patience", "edges", "features", "labels",
                                 "nodes", "communities", "p_in", "p_out", "feature_dim",
                                 "feature_noise", "normalize_features"};

double num(const std::string& key, const std::string& v) {
  try {
    return parse_double(v, 0);
  } catch (const Error&) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
}

long long integer(const std::string& key, const std::string& v, long long lo) {
  const double d = num(key, v);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError(key + ": '" + v + "' is not an integer");
  if (d < static_cast<double>(lo)) throw ConfigError(key + ": must be >= " + std::to_string(lo));
  return static_cast<long long>(d);
}

double positive(const std::string& key, const std::string& v) {
  const double d = num(key, v);
  if (!(d > 0.0)) throw ConfigError(key + ": must be > 0");
  return d;
}

double probability(const std::string& key, const std::string& v) {
  const double d = num(key, v);
  if (!(d >= 0.0 && d <= 1.0)) throw ConfigError(key + ": must lie in [0, 1]");
  return d;
}

spd::Metric metric(const std::string& key, const std::string& v) {
  try {
    return spd::parse_metric(v);
  } catch (const Error&) {
    throw ConfigError(key + ": unknown metric '" + v + "' (ai | le | lc)");
  }
}

bool flag(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError(key + ": expected 0 or 1");
}

void apply_defaults(RunConfig& c) {
  if (is_gcn(c.model)) {
    c.epochs = 500;
    c.lr = 1e-2;
    c.weight_decay = 1e-2;
    c.patience = 200;
    c.n = 4;
    c.p = 2;
    c.data_seed = 7;
  }
}

}  // namespace

RunConfig parse_run_config(const KeyValues& kv) {
  auto it = kv.find("model");
  if (it == kv.end()) throw ConfigError("missing key 'model'");
  RunConfig c;
  c.model = parse_model(it->second);
  apply_defaults(c);
  const bool gcn = is_gcn(c.model);
  for (const auto& [k, v] : kv) {
    const bool ok = kCommon.count(k) || (!gcn && kSpd.count(k)) ||
                    (c.model == ModelKind::Spsd && kSpsd.count(k)) || (gcn && kGcn.count(k));
    if (!ok) throw ConfigError("key '" + k + "' is not valid for model " + std::string(to_string(c.model)));
    if (k == "model") continue;
    if (k == "seed") c.seed = static_cast<std::uint64_t>(integer(k, v, 0));
    else if (k == "epochs") c.epochs = static_cast<int>(integer(k, v, 0));
    else if (k == "lr") c.lr = positive(k, v);
    else if (k == "weight_decay") {
      c.weight_decay = num(k, v);
      if (c.weight_decay < 0.0) throw ConfigError("weight_decay: must be >= 0");
    } else if (k == "data") c.data = v;
    else if (k == "data_seed") c.data_seed = static_cast<std::uint64_t>(integer(k, v, 0));
    else if (k == "batch_size") c.batch_size = static_cast<std::size_t>(integer(k, v, 1));
    else if (k == "patience") c.patience = static_cast<int>(integer(k, v, 0));
    else if (k == "conv_metric") c.conv_metric.tag = metric(k, v);
    else if (k == "conv_beta") c.conv_metric.beta = num(k, v);
    else if (k == "mlr_metric") c.mlr_metric.tag = metric(k, v);
    else if (k == "mlr_beta") c.mlr_metric.beta = num(k, v);
    else if (k == "lambda") c.lambda = positive(k, v);
    else if (k == "gamma") c.gamma = probability(k, v);
    else if (k == "n") c.n = integer(k, v, 1);
    else if (k == "m") c.m = integer(k, v, 1);
    else if (k == "p") c.p = integer(k, v, 1);
    else if (k == "window") c.window = integer(k, v, 1);
    else if (k == "stride") c.stride = integer(k, v, 1);
    else if (k == "data_dir") c.data_dir = v;
    else if (k == "edges") c.edges = v;
    else if (k == "features") c.features = v;
    else if (k == "labels") c.labels = v;
    else if (k == "classes") c.classes = static_cast<int>(integer(k, v, 2));
    else if (k == "per_class") c.per_class = static_cast<int>(integer(k, v, 1));
    else if (k == "train_size") c.train_size = static_cast<std::size_t>(integer(k, v, 1));
    else if (k == "sigma") {
      c.sigma = num(k, v);
      if (c.sigma < 0.0) throw ConfigError("sigma: must be >= 0");
    } else if (k == "frame_rows") c.frame_rows = integer(k, v, 1);
    else if (k == "series_window") c.series_window = integer(k, v, 2);
    else if (k == "series_stride") c.series_stride = integer(k, v, 1);
    else if (k == "pyramid") {
      c.pyramid = static_cast<int>(integer(k, v, 1));
      if (c.pyramid > 2) throw ConfigError("pyramid: must be 1 or 2");
    } else if (k == "nodes") c.nodes = integer(k, v, 1);
    else if (k == "communities") c.communities = static_cast<int>(integer(k, v, 2));
    else if (k == "p_in") c.p_in = probability(k, v);
    else if (k == "p_out") c.p_out = probability(k, v);
    else if (k == "feature_dim") c.feature_dim = integer(k, v, 1);
    else if (k == "feature_noise") {
      c.feature_noise = num(k, v);
      if (c.feature_noise < 0.0) throw ConfigError("feature_noise: must be >= 0");
    } else if (k == "normalize_features") c.normalize_features = flag(k, v);
    else if (k == "layers") c.layers = static_cast<int>(integer(k, v, 0));
  }

  if (gcn) {
    if (c.p >= c.n) throw ConfigError("need p < n");
    if (c.data == "synthetic") {
      if (!(c.p_in > c.p_out)) throw ConfigError("need p_in > p_out");
      if (c.feature_dim < c.communities) throw ConfigError("feature_dim must be >= communities");
    } else if (c.data == "graph") {
      if (c.edges.empty() || c.features.empty() || c.labels.empty()) {
        throw ConfigError("data=graph needs edges, features and labels");
      }
    } else {
      throw ConfigError("data: expected synthetic or graph for GCN models");
    }
    return c;
  }

  try {
    spd::validate(c.conv_metric, c.m);
    spd::validate(c.mlr_metric, c.model == ModelKind::Spd ? 1 : c.p);
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (c.mlr_metric.tag == spd::Metric::AI && c.mlr_metric.beta != 0.0) {
    throw ConfigError("mlr_metric=ai is supported with mlr_beta=0 only");
  }
  if (c.model == ModelKind::Spsd && c.p >= c.m) throw ConfigError("structure rank p must be < m");
  if (c.data == "synthetic") {
    const auto total = static_cast<std::size_t>(c.classes) * static_cast<std::size_t>(c.per_class);
    if (c.train_size >= total) throw ConfigError("train_size must be below classes * per_class");
    if (c.window != 1) throw ConfigError("synthetic samples have length 1; window must be 1");
  } else if (c.data == "sequences" || c.data == "timeseries") {
    if (c.data_dir.empty()) throw ConfigError("data=" + c.data + " needs data_dir");
  } else {
    throw ConfigError("data: expected synthetic, sequences or timeseries for SPD models");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  KeyValues kv;
  try {
    kv = read_key_values(path);
  } catch (const ParseError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(kv);
}

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv{{"model", std::string(to_string(c.model))},
               {"seed", std::to_string(c.seed)},
               {"epochs", std::to_string(c.epochs)},
               {"lr", format_double(c.lr)},
               {"weight_decay", format_double(c.weight_decay)},
               {"data", c.data},
               {"data_seed", std::to_string(c.data_seed)},
               {"n", std::to_string(c.n)},
               {"p", std::to_string(c.p)}};
  if (is_gcn(c.model)) {
    kv["layers"] = std::to_string(c.layers);
    kv["patience"] = std::to_string(c.patience);
    kv["normalize_features"] = c.normalize_features ? "1" : "0";
    if (c.data == "graph") {
      kv["edges"] = c.edges.string();
      kv["features"] = c.features.string();
      kv["labels"] = c.labels.string();
    } else {
      kv["nodes"] = std::to_string(c.nodes);
      kv["communities"] = std::to_string(c.communities);
      kv["p_in"] = format_double(c.p_in);
      kv["p_out"] = format_double(c.p_out);
      kv["feature_dim"] = std::to_string(c.feature_dim);
      kv["feature_noise"] = format_double(c.feature_noise);
    }
    return kv;
  }
  if (c.model == ModelKind::Spd) kv.erase("p");
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["conv_metric"] = std::string(spd::to_string(c.conv_metric.tag));
  kv["conv_beta"] = format_double(c.conv_metric.beta);
  kv["mlr_metric"] = std::string(spd::to_string(c.mlr_metric.tag));
  kv["mlr_beta"] = format_double(c.mlr_metric.beta);
  kv["m"] = std::to_string(c.m);
  kv["window"] = std::to_string(c.window);
  kv["stride"] = std::to_string(c.stride);
  if (c.model == ModelKind::Spsd) {
    kv["lambda"] = format_double(c.lambda);
    kv["gamma"] = format_double(c.gamma);
  }
  if (c.data == "synthetic") {
    kv["classes"] = std::to_string(c.classes);
    kv["per_class"] = std::to_string(c.per_class);
    kv["train_size"] = std::to_string(c.train_size);
    kv["sigma"] = format_double(c.sigma);
  } else {
    kv["data_dir"] = c.data_dir.string();
    kv["train_size"] = std::to_string(c.train_size);
    if (c.data == "timeseries") {
      kv["frame_rows"] = std::to_string(c.frame_rows);
      kv["series_window"] = std::to_string(c.series_window);
      kv["series_stride"] = std::to_string(c.series_stride);
      kv["pyramid"] = std::to_string(c.pyramid);
    }
  }
  return kv;
}

}  // namespace gyromat
