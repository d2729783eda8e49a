#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gyromat/errors.hpp"
#include "gyromat/nn.hpp"
#include "gyromat/train.hpp"
#include "test_util.hpp"

using namespace gyromat;
using namespace gyromat::nn;
using testutil::random_spd;
using testutil::rel;

namespace {

namespace fs = std::filesystem;

const spd::SpdMetric kAI{spd::Metric::AI, 0.0};
const spd::SpdMetric kLE{spd::Metric::LE, 0.0};
const spd::SpdMetric kLC{spd::Metric::LC, 0.0};

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("gyromat_test_nn_" + name);
  fs::remove_all(d);
  return d;
}

std::vector<Var> bind_all(Tape& t, const ParamStore& s) { return s.bind(t); }

data::SpdDataset small_dataset(int per_class, std::size_t train, Index n = 6) {
  data::SynthSpdOptions o;
  o.per_class = per_class;
  o.n = n;
  return data::split_dataset(data::synth_spd_classes(o), train, 3, 5);
}

}  // namespace

TEST(ConvLayer, ZeroParametersGiveIdentity) {
  std::mt19937_64 rng(1);
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    ParamStore store;
    Rng r = make_rng(1, "t");
    SpdConvLayer layer({g, 5, 3, 1, 1}, store, "c", r);
    for (std::size_t i = 0; i < store.size(); ++i) store.value(i).setZero();
    Tape t(false);
    auto bound = bind_all(t, store);
    Var x = t.constant(random_spd(rng, 5));
    auto out = layer.forward(layer.prepare(bound), std::span<const Var>(&x, 1));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_LT(rel(out[0].value(), Matrix::Identity(3, 3)), 1e-14) << spd::to_string(g.tag);
  }
}

TEST(ConvLayer, MatchesPlainForward) {
  std::mt19937_64 rng(2);
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    ParamStore store;
    Rng r = make_rng(2, "t");
    SpdConvLayer layer({g, 3, 2, 2, 1}, store, "c", r);
    for (std::size_t i = 0; i < store.size(); ++i) store.value(i) += 0.2 * testutil::random_sym(rng, 3);
    std::vector<SpdMatrix> seq;
    for (int i = 0; i < 3; ++i) seq.emplace_back(random_spd(rng, 3));
    const auto plain = spd::spd_conv_forward(g, seq, 2, 1, 2, layer.fc_params(store));
    Tape t(false);
    auto bound = bind_all(t, store);
    std::vector<Var> xs;
    for (const auto& s : seq) xs.push_back(t.constant(s.matrix()));
    const auto out = layer.forward(layer.prepare(bound), xs);
    ASSERT_EQ(out.size(), plain.size());
    for (std::size_t k = 0; k < out.size(); ++k) EXPECT_LT(rel(out[k].value(), plain[k].matrix()), 1e-10);
  }
}

TEST(ConvLayer, GradcheckConvThenFc) {
  Rng r = make_rng(3, "t");
  ParamStore store;
  SpdConvLayer conv({kAI, 3, 3, 2, 1}, store, "conv", r);
  SpdConvLayer fc({kLE, 3, 2, 1, 1}, store, "fc", r);
  std::vector<Matrix> x0;
  for (std::size_t i = 0; i < store.size(); ++i) x0.push_back(store.value(i) + 0.2 * normal_sym(r, 3));
  const std::size_t np = x0.size();
  for (int i = 0; i < 3; ++i) x0.push_back(normal_sym(r, 3, 0.5));
  const Matrix w = normal_matrix(r, 2, 2);
  auto f = [&](Tape&, std::span<const Var> xs) {
    std::vector<Var> seq;
    for (std::size_t i = np; i < xs.size(); ++i) seq.push_back(spd_param(xs[i]));
    auto mid = conv.forward(conv.prepare(xs.first(np)), seq);
    Var loss;
    for (const Var& y : mid) {
      auto out = fc.forward(fc.prepare(xs.first(np)), std::span<const Var>(&y, 1));
      Var term = ad::sum(ad::hadamard(out[0], ad::constant_like(out[0], w)));
      loss = loss.valid() ? loss + term : term;
    }
    return loss;
  };
  EXPECT_LT(ad::gradcheck(f, x0).max_rel_err, 1e-3);
}

TEST(MlrHead, IdenticalClassesAndSignFlip) {
  std::mt19937_64 rng(4);
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    ParamStore store;
    Rng r = make_rng(4, "t");
    SpdMlrHead head(g, 3, 3, store, "mlr", r);
    const std::size_t p0 = store.find("mlr.p.0"), p1 = store.find("mlr.p.1"), p2 = store.find("mlr.p.2");
    const std::size_t a0 = store.find("mlr.a.0"), a1 = store.find("mlr.a.1"), a2 = store.find("mlr.a.2");
    store.value(p0) = 0.3 * testutil::random_sym(rng, 3);
    store.value(p1) = store.value(p0);
    store.value(a1) = store.value(a0);
    store.value(p2) = store.value(p0);
    store.value(a2) = -store.value(a0);
    for (int t = 0; t < 5; ++t) {
      Tape tape(false);
      auto bound = bind_all(tape, store);
      Var x = tape.constant(random_spd(rng, 3));
      const Matrix z = head.logits(head.prepare(bound), x).value();
      EXPECT_EQ(z(0), z(1));
      EXPECT_NEAR(z(2), -z(0), 1e-12 * std::max(1.0, std::abs(z(0))));
    }
  }
}

TEST(MlrHead, MatchesPlainSignedNumerators) {
  std::mt19937_64 rng(5);
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    ParamStore store;
    Rng r = make_rng(5, "t");
    SpdMlrHead head(g, 4, 3, store, "mlr", r);
    for (std::size_t i = 0; i < store.size(); ++i) store.value(i) += 0.3 * testutil::random_sym(rng, 4);
    const SpdMatrix x(random_spd(rng, 4));
    Tape tape(false);
    auto bound = bind_all(tape, store);
    const Matrix z = head.logits(head.prepare(bound), tape.constant(x.matrix())).value();
    const Vector plain = spd::spd_mlr_logits(g, x, head.hyperplanes(store));
    EXPECT_LT(rel(z, plain), 1e-10) << spd::to_string(g.tag);
  }
  ParamStore store;
  Rng r = make_rng(5, "t");
  EXPECT_THROW(SpdMlrHead({spd::Metric::AI, 0.5}, 3, 3, store, "x", r), ConfigError);
  EXPECT_THROW(SpdMlrHead(kLE, 3, 1, store, "y", r), ConfigError);
}

TEST(SpsdHead, IdenticalClassesAndSignFlip) {
  std::mt19937_64 rng(6);
  ParamStore store;
  Rng r = make_rng(6, "t");
  SpsdMlrHead head(spsd::SpsdConfig{}, 4, 2, 3, store, "mlr", r);
  for (const std::string& k : {"up", "sp", "uw", "sw"}) {
    const std::size_t i0 = store.find("mlr." + k + ".0");
    store.value(i0) += 0.2 * testutil::gaussian(rng, store.value(i0).rows(), store.value(i0).cols());
    if (k == "sp" || k == "sw") store.value(i0) = 0.5 * (store.value(i0) + store.value(i0).transpose()).eval();
    store.value(store.find("mlr." + k + ".1")) = store.value(i0);
    const bool normal = k == "uw" || k == "sw";
    store.value(store.find("mlr." + k + ".2")) = normal ? Matrix(-store.value(i0)) : store.value(i0);
  }
  const Matrix um = gr::skew_param_onb(0.2 * testutil::gaussian(rng, 2, 2)).matrix();
  for (int t = 0; t < 5; ++t) {
    Tape tape(false);
    auto bound = bind_all(tape, store);
    Var x = tape.constant(random_spd(rng, 4, 0.2, 3.0));
    const Matrix z = head.logits(head.prepare(bound), x, um).value();
    EXPECT_EQ(z(0), z(1));
    EXPECT_NEAR(z(2), -z(0), 1e-10 * std::max(1.0, std::abs(z(0))));
  }
}

TEST(Losses, CrossEntropyExamples) {
  Tape t(false);
  for (int c : {2, 5, 10}) {
    EXPECT_NEAR(ad::cross_entropy(t.constant(Matrix::Zero(c, 1)), 1).scalar(), std::log(c), 1e-14);
  }
  Matrix z = Matrix::Zero(3, 1);
  z(1) = 800.0;
  EXPECT_LT(ad::cross_entropy(t.constant(z), 1).scalar(), 1e-300);
  EXPECT_TRUE(std::isfinite(ad::cross_entropy(t.constant(z), 0).scalar()));
  EXPECT_THROW(ad::cross_entropy(t.constant(z), 3), ArgumentError);
  EXPECT_THROW(ad::cross_entropy(t.constant(z), -1), ArgumentError);

  Matrix batch(2, 3);
  batch << 1, 0, 2, 0, 1, 0;
  EXPECT_EQ(argmax_columns(batch), std::vector<int>({0, 1, 0}));
  const double mean = mean_cross_entropy(t.constant(batch), {0, 1, 1}).scalar();
  double expect = 0.0;
  for (int j = 0; j < 3; ++j) {
    const int l = std::vector<int>{0, 1, 1}[static_cast<std::size_t>(j)];
    expect += std::log(std::exp(batch(0, j)) + std::exp(batch(1, j))) - batch(l, j);
  }
  EXPECT_NEAR(mean, expect / 3.0, 1e-14);
}

TEST(Adam, QuadraticBowl) {
  ParamStore store;
  const std::size_t i = store.add("x", Matrix::Constant(3, 1, 2.0));
  Matrix a(3, 3);
  a << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
  Vector c(3);
  c << -1, 0.5, 2;
  Adam adam(AdamOptions{1e-2});
  for (int step = 0; step < 5000; ++step) adam.step(store, {a * (store.value(i) - c)});
  EXPECT_LT((store.value(i) - c).norm(), 1e-6);
  EXPECT_EQ(adam.steps(), 5000);
  EXPECT_THROW(adam.step(store, {Matrix::Constant(3, 1, std::nan(""))}), NumericalError);
}

TEST(Adam, WeightDecaySkipsExemptParameters) {
  ParamStore store;
  store.add("decayed", Matrix::Ones(1, 1));
  store.add("exempt", Matrix::Ones(1, 1), false);
  Adam adam(AdamOptions{1e-2, 0.9, 0.999, 1e-8, 0.1});
  adam.step(store, {Matrix::Zero(1, 1), Matrix::Zero(1, 1)});
  EXPECT_LT(store.value(0)(0), 1.0);
  EXPECT_EQ(store.value(1)(0), 1.0);
}

TEST(SpdNet, LearnsSeparableClasses) {
  const data::SpdDataset ds = small_dataset(20, 45);
  for (bool structure : {false, true}) {
    SpdNetSpec spec;
    spec.conv = {kAI, 6, 3, 1, 1};
    spec.classes = 3;
    spec.structure_head = structure;
    spec.rank = 2;
    SpdNet net(spec, 42);
    TrainOptions opt;
    opt.epochs = 40;
    opt.batch_size = 16;
    opt.lr = 1e-2;
    (void)train_spd(net, ds, opt);
    EXPECT_EQ(evaluate_spd(net, ds.train).accuracy, 1.0) << (structure ? "spsd" : "spd");
  }
}

TEST(SpdNet, LossDecreasesOverFirstEpochs) {
  const data::SpdDataset ds = small_dataset(30, 60, 8);
  for (bool structure : {false, true}) {
    SpdNetSpec spec;
    spec.conv = {kAI, 8, 4, 1, 1};
    spec.classes = 3;
    spec.structure_head = structure;
    spec.rank = 2;
    SpdNet net(spec, 42);
    TrainOptions opt;
    opt.epochs = 10;
    opt.lr = 1e-3;
    std::vector<double> test_loss;
    for (const auto& r : train_spd(net, ds, opt)) {
      if (r.split == "test") test_loss.push_back(r.loss);
    }
    int violations = 0;
    for (std::size_t e = 1; e < test_loss.size(); ++e) violations += test_loss[e] > test_loss[e - 1] ? 1 : 0;
    EXPECT_LE(violations, 2) << (structure ? "spsd" : "spd");
    EXPECT_LT(test_loss.back(), test_loss.front());
  }
}

TEST(SpdNet, EvaluationFreezesStateAndCheckpointRoundTrips) {
  const data::SpdDataset ds = small_dataset(10, 20);
  SpdNetSpec spec;
  spec.conv = {kAI, 6, 3, 1, 1};
  spec.classes = 3;
  spec.structure_head = true;
  spec.rank = 2;
  SpdNet net(spec, 1);
  TrainOptions opt;
  opt.epochs = 2;
  (void)train_spd(net, ds, opt);
  const Matrix um = net.state().um().matrix();
  const EvalResult before = evaluate_spd(net, ds.test);
  EXPECT_TRUE(net.state().um().matrix() == um);

  const fs::path dir = scratch("ckpt");
  net.save(dir);
  SpdNet other(spec, 99);
  other.load(dir);
  EXPECT_TRUE(other.state().um().matrix() == um);
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    EXPECT_TRUE(other.params().value(i) == net.params().value(i)) << net.params().name(i);
  }
  const EvalResult after = evaluate_spd(other, ds.test);
  EXPECT_EQ(after.loss, before.loss);

  SpdNetSpec wider = spec;
  wider.conv.m = 4;
  SpdNet mismatch(wider, 1);
  EXPECT_THROW(mismatch.load(dir), ParseError);
}
