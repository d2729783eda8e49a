#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gyromat/errors.hpp"
#include "gyromat/gcn.hpp"
#include "gyromat/grassmann.hpp"
#include "gyromat/suites.hpp"
#include "gyromat/train.hpp"
#include "test_util.hpp"

using namespace gyromat;
using namespace gyromat::nn;
using ad::Tape;
using ad::Var;
using testutil::rel;

namespace {

// Undirected graph with self-loops from an edge list.
data::Graph make_graph(Index nodes, const std::vector<std::pair<Index, Index>>& edges, Matrix features) {
  data::Graph g;
  g.nodes = nodes;
  g.adj.resize(static_cast<std::size_t>(nodes));
  for (Index i = 0; i < nodes; ++i) g.adj[static_cast<std::size_t>(i)].push_back(i);
  for (auto [a, b] : edges) {
    g.adj[static_cast<std::size_t>(a)].push_back(b);
    g.adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& row : g.adj) std::sort(row.begin(), row.end());
  g.features = std::move(features);
  g.labels.assign(static_cast<std::size_t>(nodes), 0);
  g.labels.back() = 1;
  g.classes = 2;
  return g;
}

GcnSpec spec_of(GrPerspective persp, Index n, Index p, Index d, int layers) {
  GcnSpec s;
  s.perspective = persp;
  s.n = n;
  s.p = p;
  s.feature_dim = d;
  s.classes = 2;
  s.layers = layers;
  return s;
}

void zero_layers(GcnModel& model) {
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    if (model.params().name(i).rfind("layer.", 0) == 0) model.params().value(i).setZero();
  }
}

std::size_t index_of(const GcnModel& model, const std::string& name) { return model.params().find(name); }

}  // namespace

TEST(GcnCoefficient, InverseSqrtOfDegrees) {
  // Star: centre degree 4, leaves degree 2 (self-loops counted).
  const data::Graph g = make_graph(5, {{0, 1}, {0, 2}, {0, 3}}, Matrix::Zero(5, 1));
  EXPECT_DOUBLE_EQ(gcn_coefficient(g, 0, 1), 1.0 / std::sqrt(8.0));
  EXPECT_DOUBLE_EQ(gcn_coefficient(g, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(gcn_coefficient(g, 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(gcn_coefficient(g, 0, 4), 0.5);
  EXPECT_DOUBLE_EQ(gcn_coefficient(g, 4, 4), 1.0);
}

TEST(GcnEmbed, ZeroFeaturesGiveIdentityPoint) {
  for (GrPerspective persp : {GrPerspective::Projector, GrPerspective::Onb}) {
    GcnModel model(spec_of(persp, 5, 2, 3, 0), 1);
    model.params().value(index_of(model, "embed.b")).setZero();
    Tape t(false);
    const auto bound = model.params().bind(t);
    const auto xs = model.embed(bound, Matrix::Zero(4, 3));
    const Matrix expect = persp == GrPerspective::Onb ? gr::tilde_np(5, 2) : gr::ident_np(5, 2);
    for (const Var& x : xs) EXPECT_LT(rel(x.value(), expect), 1e-15);
  }
}

TEST(GcnEmbed, PlaneRotation) {
  GcnModel model(spec_of(GrPerspective::Onb, 2, 1, 1, 0), 1);
  GcnModel proj(spec_of(GrPerspective::Projector, 2, 1, 1, 0), 1);
  for (double b : {0.3, -0.7, 1.2}) {
    for (GcnModel* m : {&model, &proj}) {
      m->params().value(index_of(*m, "embed.w"))(0, 0) = b;
      m->params().value(index_of(*m, "embed.b")).setZero();
    }
    Tape t(false);
    const Matrix u = model.embed(model.params().bind(t), Matrix::Ones(1, 1))[0].value();
    EXPECT_NEAR(u(0, 0), std::cos(b), 1e-15);
    EXPECT_NEAR(u(1, 0), -std::sin(b), 1e-15);
    const Matrix pm = proj.embed(proj.params().bind(t), Matrix::Ones(1, 1))[0].value();
    EXPECT_LT(rel(pm, u * u.transpose()), 1e-14);
  }
}

TEST(GcnLayer, SingleNodeWithZeroParametersIsTheNonlinearity) {
  std::mt19937_64 rng(3);
  const data::Graph g = make_graph(1, {}, testutil::gaussian(rng, 1, 3));
  for (GrPerspective persp : {GrPerspective::Projector, GrPerspective::Onb}) {
    GcnModel model(spec_of(persp, 5, 2, 3, 1), 3);
    model.params().value(index_of(model, "embed.w")) *= 5.0;
    zero_layers(model);
    Tape t(false);
    const auto bound = model.params().bind(t);
    const auto xs = model.embed(bound, g.features);
    const auto ys = model.layer(bound, 0, g, xs);
    ASSERT_EQ(ys.size(), 1u);
    if (persp == GrPerspective::Onb) {
      // ONB points are compared as subspaces; Exp after Log returns the canonical basis.
      const Matrix expect = gr::tau(gr::gr_nonlinearity_onb(gr::OnbPoint(xs[0].value()))).matrix();
      const Matrix y = ys[0].value();
      EXPECT_LT(rel(y * y.transpose(), expect), 1e-10);
    } else {
      const gr::ProjectorPoint expect = gr::gr_nonlinearity(gr::ProjectorPoint(xs[0].value()));
      EXPECT_LT(rel(ys[0].value(), expect.matrix()), 1e-10);
    }
  }
}

TEST(GcnLayer, OnbMatchesProjectorUnderTau) {
  std::mt19937_64 rng(4);
  const data::Graph g = make_graph(5, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}}, testutil::gaussian(rng, 5, 3));
  GcnModel proj(spec_of(GrPerspective::Projector, 5, 2, 3, 2), 11);
  GcnModel onb(spec_of(GrPerspective::Onb, 5, 2, 3, 2), 11);
  ASSERT_EQ(proj.params().size(), onb.params().size());
  for (std::size_t i = 0; i < proj.params().size(); ++i) {
    if (proj.params().name(i) == "embed.w") proj.params().value(i) *= 4.0;
    if (proj.params().name(i).rfind("layer.", 0) == 0) {
      proj.params().value(i) += 0.3 * testutil::gaussian(rng, proj.params().value(i).rows(),
                                                         proj.params().value(i).cols());
    }
    onb.params().value(i) = proj.params().value(i);
  }
  Tape t(false);
  const auto bp = proj.params().bind(t);
  const auto bo = onb.params().bind(t);
  auto xp = proj.embed(bp, g.features);
  auto xo = onb.embed(bo, g.features);
  for (int l = 0; l < 2; ++l) {
    xp = proj.layer(bp, l, g, xp);
    xo = onb.layer(bo, l, g, xo);
    for (std::size_t j = 0; j < xp.size(); ++j) {
      const Matrix u = xo[j].value();
      EXPECT_LT(rel(u * u.transpose(), xp[j].value()), 1e-6) << "layer " << l << " node " << j;
    }
  }
  EXPECT_LT(rel(onb.logits(bo, g).value(), proj.logits(bp, g).value()), 1e-6);
}

TEST(GcnHead, IdentityGivesBiasAndTangentIsAffine) {
  GcnModel model(spec_of(GrPerspective::Projector, 4, 2, 3, 0), 5);
  Matrix bias(2, 1);
  bias << 0.25, -1.5;
  model.params().value(index_of(model, "head.b")) = bias;
  Tape t(false);
  const auto bound = model.params().bind(t);
  const Var id = t.constant(gr::ident_np(4, 2));
  EXPECT_LT(rel(model.head(bound, {id}).value(), bias), 1e-14);

  std::mt19937_64 rng(5);
  const Matrix b = 0.2 * testutil::gaussian(rng, 2, 2);
  Matrix delta = Matrix::Zero(4, 4);
  delta.topRightCorner(2, 2) = b;
  delta.bottomLeftCorner(2, 2) = b.transpose();
  std::vector<Var> xs;
  for (double s : {0.0, 1.0, 2.0, 3.0}) xs.push_back(gr::var::exp_identity(t.constant(s * delta), 2));
  const Matrix z = model.head(bound, xs).value();
  EXPECT_LT((z.col(2) - 2.0 * z.col(1) + z.col(0)).norm(), 1e-10);
  EXPECT_LT((z.col(3) - 3.0 * z.col(1) + 2.0 * z.col(0)).norm(), 1e-10);
  const Matrix w = model.params().value(index_of(model, "head.w"));
  Eigen::Map<const Vector> vb(b.data(), b.size());
  EXPECT_LT((z.col(1) - z.col(0) - w * vb).norm(), 1e-10);
}

TEST(GcnGradcheck, AllTargets) {
  for (const std::string target : {"gr-gcn-embed", "gr-gcn-layer", "gr-gcn-head"}) {
    for (std::uint64_t seed : {1, 2}) EXPECT_LT(suites::run_gradcheck(target, seed), 1e-3) << target;
  }
}

TEST(GcnErrors, CutLocusNamesTheNode) {
  Matrix features(3, 1);
  features << 0.0, 0.5, 1.0;
  const data::Graph g = make_graph(3, {}, features);
  for (int layers : {0, 1}) {
    GcnModel model(spec_of(GrPerspective::Onb, 2, 1, 1, layers), 1);
    model.params().value(index_of(model, "embed.w"))(0, 0) = std::numbers::pi / 2.0;
    model.params().value(index_of(model, "embed.b")).setZero();
    zero_layers(model);
    Tape t(false);
    const auto bound = model.params().bind(t);
    try {
      (void)model.logits(bound, g);
      ADD_FAILURE() << "expected a cut-locus error";
    } catch (const CutLocusError& e) {
      const std::string where = layers == 0 ? "gcn head: node 2" : "gcn layer 0: node 2";
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(GcnModel(spec_of(GrPerspective::Onb, 3, 3, 1, 1), 1), ConfigError);
  GcnModel model(spec_of(GrPerspective::Onb, 3, 1, 2, 1), 1);
  Tape t(false);
  EXPECT_THROW((void)model.embed(model.params().bind(t), Matrix::Zero(2, 3)), ArgumentError);
}

TEST(GcnTraining, FitsSmallCommunityGraph) {
  data::SbmOptions o;
  o.nodes = 60;
  o.communities = 2;
  o.p_in = 0.3;
  o.p_out = 0.02;
  o.feature_dim = 4;
  data::Graph g = data::synth_sbm_graph(o);
  data::normalize_feature_rows(g);
  for (GrPerspective persp : {GrPerspective::Projector, GrPerspective::Onb}) {
    GcnSpec s = spec_of(persp, 4, 2, 4, 1);
    GcnModel model(s, 42);
    TrainOptions opt;
    opt.epochs = 60;
    opt.lr = 1e-2;
    opt.weight_decay = 1e-2;
    const auto recs = train_gcn(model, g, opt);
    EXPECT_FALSE(recs.empty());
    EXPECT_GE(evaluate_gcn(model, g, g.train).accuracy, 0.9);
    model.check_invariants();
  }
}
