#include "gyromat/run.hpp"

#include <algorithm>

#include "gyromat/csv.hpp"
#include "gyromat/data.hpp"
#include "gyromat/errors.hpp"

namespace gyromat {

namespace {

namespace fs = std::filesystem;

struct SpdData {
  data::SpdDataset ds;
  Index n = 0;
  Index len = 0;
};

// Resolves n and classes from the data for file-backed inputs.
SpdData load_spd(RunConfig& c) {
  std::vector<data::SpdSample> all;
  if (c.data == "synthetic") {
    all = data::synth_spd_classes({c.classes, c.per_class, c.n, c.sigma, c.data_seed});
  } else if (c.data == "sequences") {
    all = data::read_sequences(c.data_dir);
  } else {
    data::WindowOptions w;
    w.window = c.series_window;
    w.stride = c.series_stride;
    for (auto& s : data::read_timeseries(c.data_dir, c.frame_rows)) {
      all.push_back({data::windowed_spd_pyramid(s.series, w, c.pyramid), s.label});
    }
  }
  if (all.empty()) throw Error("no samples in " + c.data_dir.string());
  SpdData out;
  out.len = static_cast<Index>(all.front().seq.size());
  out.n = all.front().seq.empty() ? 0 : all.front().seq.front().size();
  int classes = 0;
  for (const auto& s : all) {
    if (static_cast<Index>(s.seq.size()) != out.len) throw Error("samples must share one sequence length");
    for (const auto& x : s.seq) {
      if (x.size() != out.n) throw Error("samples must share one matrix size");
    }
    if (s.label < 0) throw Error("negative label");
    classes = std::max(classes, s.label + 1);
  }
  if (out.len < 1 || out.n < 1) throw Error("empty sample");
  if (classes < 2) throw ConfigError("need at least 2 classes in the data");
  if (c.window > out.len) throw ConfigError("window exceeds the sequence length");
  if (c.train_size >= all.size()) throw ConfigError("train_size must be below the sample count");
  c.n = out.n;
  c.classes = classes;
  out.ds = data::split_dataset(std::move(all), c.train_size, classes, c.data_seed);
  return out;
}

data::Graph load_gcn(RunConfig& c) {
  data::Graph g;
  if (c.data == "synthetic") {
    g = data::synth_sbm_graph({c.nodes, c.communities, c.p_in, c.p_out, c.feature_dim, c.feature_noise,
                               c.data_seed});
  } else {
    g = data::load_graph(c.edges, c.features, c.labels, c.data_seed);
  }
  if (c.normalize_features) data::normalize_feature_rows(g);
  c.feature_dim = g.features.cols();
  return g;
}

nn::SpdNetSpec spd_spec(const RunConfig& c, Index len) {
  nn::SpdNetSpec s;
  s.conv = {c.conv_metric, c.n, c.m, c.window, c.stride};
  s.seq_len = len;
  s.classes = c.classes;
  s.structure_head = c.model == ModelKind::Spsd;
  s.mlr_metric = c.mlr_metric;
  s.spsd = {c.lambda, c.mlr_metric, c.gamma};
  s.rank = c.p;
  return s;
}

nn::GcnSpec gcn_spec(const RunConfig& c, const data::Graph& g) {
  nn::GcnSpec s;
  s.perspective = c.model == ModelKind::GrGcnOnb ? nn::GrPerspective::Onb : nn::GrPerspective::Projector;
  s.n = c.n;
  s.p = c.p;
  s.feature_dim = g.features.cols();
  s.classes = g.classes;
  s.layers = c.layers;
  return s;
}

nn::TrainOptions train_options(const RunConfig& c) {
  nn::TrainOptions o;
  o.epochs = c.epochs;
  o.batch_size = c.batch_size;
  o.lr = c.lr;
  o.weight_decay = c.weight_decay;
  o.patience = c.patience;
  o.seed = c.seed;
  return o;
}

void finish(RunSummary& r) {
  for (const auto& [name, e] : r.splits) {
    if (name == "test") r.test_accuracy = e.accuracy;
  }
}

void write_outputs(const fs::path& out, const RunConfig& c, const RunSummary& r) {
  fs::create_directories(out);
  nn::write_metrics(out / "metrics.csv", r.records);
  nn::write_timing(out / "timing.csv", r.records);
  write_key_values(out / "config.txt", to_key_values(c));
}

}  // namespace

RunSummary run_training(const RunConfig& cfg, const fs::path& out_dir, const nn::EpochCallback& on_epoch) {
  RunConfig c = cfg;
  RunSummary r;
  if (is_gcn(c.model)) {
    const data::Graph g = load_gcn(c);
    nn::GcnModel model(gcn_spec(c, g), c.seed);
    r.records = nn::train_gcn(model, g, train_options(c), on_epoch);
    r.splits = {{"train", nn::evaluate_gcn(model, g, g.train)},
                {"dev", nn::evaluate_gcn(model, g, g.dev)},
                {"test", nn::evaluate_gcn(model, g, g.test)}};
    finish(r);
    write_outputs(out_dir, c, r);
    model.save(out_dir / "checkpoint");
    return r;
  }
  SpdData d = load_spd(c);
  nn::SpdNet net(spd_spec(c, d.len), c.seed);
  r.records = nn::train_spd(net, d.ds, train_options(c), on_epoch);
  r.splits = {{"train", nn::evaluate_spd(net, d.ds.train)}, {"test", nn::evaluate_spd(net, d.ds.test)}};
  finish(r);
  write_outputs(out_dir, c, r);
  net.save(out_dir / "checkpoint");
  return r;
}

RunSummary run_evaluation(const RunConfig& cfg, const fs::path& out_dir) {
  const fs::path ckpt = out_dir / "checkpoint";
  if (!fs::is_directory(ckpt)) throw Error("no checkpoint at " + ckpt.string());
  RunConfig c = cfg;
  RunSummary r;
  if (is_gcn(c.model)) {
    const data::Graph g = load_gcn(c);
    nn::GcnModel model(gcn_spec(c, g), c.seed);
    model.load(ckpt);
    r.splits = {{"train", nn::evaluate_gcn(model, g, g.train)},
                {"dev", nn::evaluate_gcn(model, g, g.dev)},
                {"test", nn::evaluate_gcn(model, g, g.test)}};
  } else {
    SpdData d = load_spd(c);
    nn::SpdNet net(spd_spec(c, d.len), c.seed);
    net.load(ckpt);
    r.splits = {{"train", nn::evaluate_spd(net, d.ds.train)}, {"test", nn::evaluate_spd(net, d.ds.test)}};
  }
  finish(r);
  return r;
}

}  // namespace gyromat
