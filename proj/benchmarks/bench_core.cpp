#include <benchmark/benchmark.h>

#include "gyromat/grassmann.hpp"
#include "gyromat/gyro_spd.hpp"
#include "gyromat/rng.hpp"
#include "gyromat/spsd.hpp"
#include "gyromat/train.hpp"

using namespace gyromat;

namespace {

SpdMatrix rand_spd(Rng& rng, Index n) { return spd_exp(SymMatrix(normal_sym(rng, n, 0.5))); }

template <spd::Metric M>
void BM_SpdAdd(benchmark::State& state) {
  Rng rng = make_rng(1, "bench");
  const Index n = state.range(0);
  const SpdMatrix a = rand_spd(rng, n), b = rand_spd(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(spd::spd_add({M, 0.0}, a, b));
}
BENCHMARK(BM_SpdAdd<spd::Metric::AI>)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_SpdAdd<spd::Metric::LE>)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_SpdAdd<spd::Metric::LC>)->Arg(4)->Arg(8)->Arg(16);

void BM_SpdFcForward(benchmark::State& state) {
  Rng rng = make_rng(2, "bench");
  const Index n = state.range(0);
  const spd::SpdMetric g{spd::Metric::AI, 0.0};
  const SpdMatrix x = rand_spd(rng, n);
  const spd::FcParams params = spd::fc_identity_params(g, n);
  for (auto _ : state) benchmark::DoNotOptimize(spd::spd_fc_forward(g, x, params, n));
}
BENCHMARK(BM_SpdFcForward)->Arg(4)->Arg(8);

void BM_GrLogProjector(benchmark::State& state) {
  Rng rng = make_rng(3, "bench");
  const Index n = state.range(0), p = n / 2;
  const gr::ProjectorPoint a = gr::skew_param(normal_matrix(rng, p, n - p, 0.3));
  const gr::ProjectorPoint b = gr::skew_param(normal_matrix(rng, p, n - p, 0.3));
  for (auto _ : state) benchmark::DoNotOptimize(gr::gr_log_projector(a, b));
}
BENCHMARK(BM_GrLogProjector)->Arg(4)->Arg(8)->Arg(16);

void BM_GrAdd(benchmark::State& state) {
  Rng rng = make_rng(4, "bench");
  const Index n = state.range(0), p = n / 2;
  const gr::ProjectorPoint a = gr::skew_param(normal_matrix(rng, p, n - p, 0.3));
  const gr::ProjectorPoint b = gr::skew_param(normal_matrix(rng, p, n - p, 0.3));
  for (auto _ : state) benchmark::DoNotOptimize(gr::gr_add(a, b));
}
BENCHMARK(BM_GrAdd)->Arg(4)->Arg(8)->Arg(16);

void BM_KarcherMean(benchmark::State& state) {
  Rng rng = make_rng(5, "bench");
  std::vector<gr::OnbPoint> us;
  for (int i = 0; i < 32; ++i) us.push_back(gr::skew_param_onb(normal_matrix(rng, 2, 4, 0.2)));
  for (auto _ : state) benchmark::DoNotOptimize(spsd::gr_mean(us));
}
BENCHMARK(BM_KarcherMean);

void BM_SpdNetBatchStep(benchmark::State& state) {
  const bool structure = state.range(0) != 0;
  data::SynthSpdOptions so;
  so.per_class = 11;
  auto samples = data::synth_spd_classes(so);
  std::vector<const data::SpdSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  nn::SpdNetSpec spec;
  spec.conv = {{spd::Metric::AI, 0.0}, 8, 4, 1, 1};
  spec.classes = 3;
  spec.structure_head = structure;
  spec.rank = 2;
  nn::SpdNet net(spec, 42);
  std::vector<int> labels;
  for (const auto* s : batch) labels.push_back(s->label);
  for (auto _ : state) {
    ad::Tape t;
    auto bound = net.params().bind(t);
    ad::Var l = nn::mean_cross_entropy(net.batch_logits(t, bound, batch, false), labels);
    t.backward(l);
    benchmark::DoNotOptimize(net.params().grads(t, bound));
  }
}
BENCHMARK(BM_SpdNetBatchStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GcnForwardBackward(benchmark::State& state) {
  data::Graph g = data::synth_sbm_graph({});
  data::normalize_feature_rows(g);
  nn::GcnSpec spec;
  spec.perspective = state.range(0) != 0 ? nn::GrPerspective::Onb : nn::GrPerspective::Projector;
  nn::GcnModel model(spec, 42);
  for (auto _ : state) {
    ad::Tape t;
    auto bound = model.params().bind(t);
    ad::Var l = nn::mean_cross_entropy(model.logits(bound, g), g.labels);
    t.backward(l);
    benchmark::DoNotOptimize(model.params().grads(t, bound));
  }
}
BENCHMARK(BM_GcnForwardBackward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
