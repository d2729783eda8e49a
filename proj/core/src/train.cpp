#include "gyromat/train.hpp"

#include <chrono>
#include <fstream>

#include "gyromat/csv.hpp"
#include "gyromat/rng.hpp"

namespace gyromat::nn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> labels_of(const std::vector<const data::SpdSample*>& batch) {
  std::vector<int> out;
  for (const auto* s : batch) out.push_back(s->label);
  return out;
}

int correct(const Matrix& logits, const std::vector<int>& labels) {
  std::vector<int> pred = argmax_columns(logits);
  int c = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) c += pred[i] == labels[i] ? 1 : 0;
  return c;
}

void emit(std::vector<EpochRecord>& out, const EpochCallback& cb, EpochRecord r) {
  if (cb) cb(r);
  out.push_back(std::move(r));
}

}  // namespace

EvalResult evaluate_spd(SpdNet& net, const std::vector<data::SpdSample>& samples,
                        std::size_t batch_size) {
  if (samples.empty()) return {};
  double loss = 0.0;
  int right = 0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<const data::SpdSample*> batch;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) batch.push_back(&samples[i]);
    Tape t(false);
    std::vector<Var> bound = net.params().bind(t);
    Var z = net.batch_logits(t, bound, batch, false);
    const std::vector<int> labels = labels_of(batch);
    loss += mean_cross_entropy(z, labels).scalar() * static_cast<double>(batch.size());
    right += correct(z.value(), labels);
  }
  const auto n = static_cast<double>(samples.size());
  return {loss / n, right / n};
}

std::vector<EpochRecord> train_spd(SpdNet& net, const data::SpdDataset& ds, const TrainOptions& opt,
                                   const EpochCallback& on_epoch) {
  if (opt.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (opt.epochs < 0) throw ConfigError("epochs must be >= 0");
  std::vector<EpochRecord> out;
  {
    const auto t0 = Clock::now();
    EvalResult tr = evaluate_spd(net, ds.train);
    EvalResult te = evaluate_spd(net, ds.test);
    const double s = seconds_since(t0);
    emit(out, on_epoch, {0, "train", tr.loss, tr.accuracy, s});
    emit(out, on_epoch, {0, "test", te.loss, te.accuracy, s});
  }
  Adam adam(AdamOptions{opt.lr, 0.9, 0.999, 1e-8, opt.weight_decay});
  Rng rng = make_rng(opt.seed, "shuffle");
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto t0 = Clock::now();
    std::vector<Index> order(ds.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
    shuffle_indices(rng, order);
    double loss = 0.0;
    int right = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      std::vector<const data::SpdSample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + opt.batch_size); ++i) {
        batch.push_back(&ds.train[static_cast<std::size_t>(order[i])]);
      }
      Tape t;
      std::vector<Var> bound = net.params().bind(t);
      Var z = net.batch_logits(t, bound, batch, true);
      const std::vector<int> labels = labels_of(batch);
      Var l = mean_cross_entropy(z, labels);
      t.backward(l);
      adam.step(net.params(), net.params().grads(t, bound));
      loss += l.scalar() * static_cast<double>(batch.size());
      right += correct(z.value(), labels);
    }
    net.check_invariants();
    const auto n = static_cast<double>(ds.train.size());
    const double train_s = seconds_since(t0);
    emit(out, on_epoch, {epoch, "train", loss / n, right / n, train_s});
    EvalResult te = evaluate_spd(net, ds.test);
    emit(out, on_epoch, {epoch, "test", te.loss, te.accuracy, seconds_since(t0)});
  }
  return out;
}

namespace {

EvalResult score(const Matrix& logits, const data::Graph& g, const std::vector<Index>& nodes) {
  if (nodes.empty()) return {};
  Tape t(false);
  Var z = t.constant(logits);
  std::vector<Var> cols;
  std::vector<int> labels;
  for (Index i : nodes) {
    cols.push_back(ad::block(z, 0, i, z.rows(), 1));
    labels.push_back(g.labels[static_cast<std::size_t>(i)]);
  }
  Var sel = ad::hcat(cols);
  return {mean_cross_entropy(sel, labels).scalar(),
          correct(sel.value(), labels) / static_cast<double>(nodes.size())};
}

}  // namespace

EvalResult evaluate_gcn(const GcnModel& model, const data::Graph& g, const std::vector<Index>& nodes) {
  Tape t(false);
  std::vector<Var> bound = model.params().bind(t);
  return score(model.logits(bound, g).value(), g, nodes);
}

std::vector<EpochRecord> train_gcn(GcnModel& model, const data::Graph& g, const TrainOptions& opt,
                                   const EpochCallback& on_epoch) {
  if (opt.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (g.train.empty()) throw ConfigError("graph has an empty train split");
  std::vector<EpochRecord> out;
  double best_loss = 0.0;
  int best_epoch = -1;
  std::vector<Matrix> best;
  auto eval_all = [&](int epoch, Clock::time_point t0) {
    Tape t(false);
    std::vector<Var> bound = model.params().bind(t);
    const Matrix z = model.logits(bound, g).value();
    const double s = seconds_since(t0);
    if (epoch == 0) {
      EvalResult tr = score(z, g, g.train);
      emit(out, on_epoch, {0, "train", tr.loss, tr.accuracy, s});
    }
    EvalResult dv = score(z, g, g.dev);
    EvalResult te = score(z, g, g.test);
    emit(out, on_epoch, {epoch, "dev", dv.loss, dv.accuracy, s});
    emit(out, on_epoch, {epoch, "test", te.loss, te.accuracy, s});
    if (!g.dev.empty() && (best_epoch < 0 || dv.loss < best_loss)) {
      best_loss = dv.loss;
      best_epoch = epoch;
      best.clear();
      for (std::size_t i = 0; i < model.params().size(); ++i) best.push_back(model.params().value(i));
    }
  };
  eval_all(0, Clock::now());
  Adam adam(AdamOptions{opt.lr, 0.9, 0.999, 1e-8, opt.weight_decay});
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto t0 = Clock::now();
    Tape t;
    std::vector<Var> bound = model.params().bind(t);
    Var z = model.logits(bound, g);
    std::vector<Var> cols;
    std::vector<int> labels;
    for (Index i : g.train) {
      cols.push_back(ad::block(z, 0, i, z.rows(), 1));
      labels.push_back(g.labels[static_cast<std::size_t>(i)]);
    }
    Var sel = ad::hcat(cols);
    Var l = mean_cross_entropy(sel, labels);
    t.backward(l);
    adam.step(model.params(), model.params().grads(t, bound));
    model.check_invariants();
    emit(out, on_epoch, {epoch, "train", l.scalar(), correct(sel.value(), labels) /
                                                         static_cast<double>(labels.size()),
                         seconds_since(t0)});
    eval_all(epoch, t0);
    if (opt.patience > 0 && best_epoch >= 0 && epoch - best_epoch >= opt.patience) break;
  }
  for (std::size_t i = 0; i < best.size(); ++i) model.params().value(i) = best[i];
  return out;
}

void write_metrics(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  std::ofstream f(path);
  f << "epoch,split,loss,accuracy\n";
  for (const auto& r : records) {
    f << r.epoch << ',' << r.split << ',' << format_double(r.loss) << ','
      << format_double(r.accuracy) << '\n';
  }
  if (!f) throw Error("cannot write " + path.string());
}

void write_timing(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  std::ofstream f(path);
  f << "epoch,split,seconds\n";
  for (const auto& r : records) f << r.epoch << ',' << r.split << ',' << r.seconds << '\n';
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace gyromat::nn
