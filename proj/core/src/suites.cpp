#include "gyromat/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "gyromat/csv.hpp"
#include "gyromat/errors.hpp"
#include "gyromat/gcn.hpp"
#include "gyromat/grassmann.hpp"
#include "gyromat/gyro_spd.hpp"
#include "gyromat/nn.hpp"
#include "gyromat/rng.hpp"
#include "gyromat/spsd.hpp"

namespace gyromat::suites {

namespace {

using ad::Tape;
using ad::Var;

constexpr double kHalfPi = std::numbers::pi / 2;

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

Matrix random_orthogonal(Rng& rng, Index n) { return qr_thin(normal_matrix(rng, n, n)).q; }

// Eigenvalues spread over [lo, hi].
SpdMatrix random_spd(Rng& rng, Index n, double lo = 0.3, double hi = 3.0) {
  Vector lam(n);
  for (Index i = 0; i < n; ++i) lam(i) = lo + (hi - lo) * (static_cast<double>(i) + uniform01(rng)) / n;
  const Matrix q = random_orthogonal(rng, n);
  const Matrix p = q * lam.asDiagonal() * q.transpose();
  return SpdMatrix(Matrix(0.5 * (p + p.transpose())));
}

// p x (n - p) matrix with spectral norm r.
Matrix scaled_b(Rng& rng, Index n, Index p, double r) {
  const Matrix b = normal_matrix(rng, p, n - p);
  return b * (r / svd_thin(b).sigma(0));
}

// Projector distance; principal angles lose half the digits near zero.
double subspace_gap(const gr::OnbPoint& a, const gr::OnbPoint& b) {
  return rel(gr::tau(a).matrix(), gr::tau(b).matrix());
}

gr::OnbPoint near_identity(Rng& rng, Index n, Index p, double max_angle) {
  return gr::skew_param_onb(scaled_b(rng, n, p, max_angle * (0.05 + 0.95 * uniform01(rng))));
}

// Accumulates the worst residual of one property.
class Property {
 public:
  Property(std::string suite, std::string name, double tol)
      : r_{std::move(suite), std::move(name), 0, 0.0, tol, true} {}
  void add(double residual) {
    ++r_.cases;
    if (!(residual <= r_.max_residual)) r_.max_residual = residual;  // NaN sticks
    if (!(residual <= r_.tolerance)) r_.pass = false;
  }
  PropertyResult result() const { return r_; }

 private:
  PropertyResult r_;
};

const spd::SpdMetric kAI{spd::Metric::AI, 0.0};
const spd::SpdMetric kLE{spd::Metric::LE, 0.0};
const spd::SpdMetric kLC{spd::Metric::LC, 0.0};

std::string metric_name(const spd::SpdMetric& g) {
  std::string s(spd::to_string(g.tag));
  if (g.tag == spd::Metric::AI && g.beta != 0.0) s += "(beta=" + format_double(g.beta) + ")";
  return s;
}

std::vector<PropertyResult> gyro_suite(std::uint64_t seed) {
  Rng rng = make_rng(seed, "suite/gyro");
  std::vector<PropertyResult> out;
  const Index n = 5;
  const SpdMatrix id = SpdMatrix::identity(n);
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    const std::string s = "gyro/" + metric_name(g);
    Property ident(s, "left identity", 1e-8), inverse(s, "left inverse", 1e-8),
        cancel(s, "left cancellation", 1e-8), assoc(s, "left gyroassociativity", 1e-8),
        reduce(s, "left reduction", 1e-8), comm(s, "gyrocommutativity", 1e-8),
        composite(s, "addition = exp o transport o log", 1e-8);
    for (int t = 0; t < 100; ++t) {
      const SpdMatrix a = random_spd(rng, n), b = random_spd(rng, n), c = random_spd(rng, n);
      const SpdMatrix ab = spd::spd_add(g, a, b);
      ident.add(rel(spd::spd_add(g, id, a), a));
      inverse.add(rel(spd::spd_add(g, spd::spd_inv(g, a), a), id));
      cancel.add(rel(spd::spd_add(g, spd::spd_inv(g, a), ab), b));
      const SpdMatrix gc = spd::gyration(g, a, b, c);
      assoc.add(rel(spd::spd_add(g, a, spd::spd_add(g, b, c)), spd::spd_add(g, ab, gc)));
      reduce.add(rel(spd::gyration(g, ab, b, c), gc));
      comm.add(rel(ab, spd::gyration(g, a, b, spd::spd_add(g, b, a))));
      composite.add(rel(spd::exp_map(g, a, spd::transport(g, id, a, spd::log_map(g, id, b))), ab));
    }
    for (const Property& p : {ident, inverse, cancel, assoc, reduce, comm, composite}) {
      out.push_back(p.result());
    }
  }
  return out;
}

std::vector<PropertyResult> basis_suite(std::uint64_t seed) {
  Rng rng = make_rng(seed, "suite/basis");
  std::vector<PropertyResult> out;
  const std::vector<spd::SpdMetric> metrics{kLE, kLC, kAI, {spd::Metric::AI, 0.5},
                                            {spd::Metric::AI, -0.1}};
  for (const spd::SpdMetric& g : metrics) {
    Property ortho("basis/" + metric_name(g), "orthonormal basis, m = 2..6", 1e-10);
    for (Index m = 2; m <= 6; ++m) {
      const auto basis = spd::spd_basis(g, m);
      for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = 0; j < basis.size(); ++j) {
          ortho.add(std::abs(spd::spd_inner(g, basis[i], basis[j]) - (i == j ? 1.0 : 0.0)));
        }
      }
    }
    out.push_back(ortho.result());
  }
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    Property fc("basis/" + metric_name(g), "identity FC layer, m = n in {3,5,8}", 1e-8);
    for (Index n : {3, 5, 8}) {
      for (int t = 0; t < 5; ++t) {
        const SpdMatrix x = random_spd(rng, n);
        fc.add(rel(spd::spd_fc_forward(g, x, spd::fc_identity_params(g, n), n), x));
      }
    }
    out.push_back(fc.result());
  }
  return out;
}

std::vector<PropertyResult> grassmann_suite(std::uint64_t seed) {
  Rng rng = make_rng(seed, "suite/grassmann");
  const std::string s = "grassmann";
  Property log_eq(s, "projector log = direct formula", 1e-6), roundtrip(s, "exp o log roundtrip", 1e-8),
      gauge(s, "log gauge invariance", 1e-9), ident(s, "left identity", 1e-8),
      inverse(s, "left inverse", 1e-8), cancel(s, "left cancellation", 1e-8),
      persp(s, "onb addition matches projector under tau", 1e-8);
  for (int t = 0; t < 200; ++t) {
    const Index n = 2 + uniform_index(rng, 7);
    const Index p = 1 + uniform_index(rng, std::min<Index>(4, n - 1));
    const Matrix q = random_orthogonal(rng, n);
    const Matrix u = q.leftCols(p);
    const Matrix v = q * gr::skew_param_onb(scaled_b(rng, n, p, (kHalfPi - 0.1) * uniform01(rng))).matrix();
    const gr::ProjectorPoint pp = gr::tau(gr::OnbPoint(u)), qq = gr::tau(gr::OnbPoint(v));
    const gr::GrTangent l = gr::gr_log_projector(pp, qq);
    log_eq.add(rel(l.matrix(), gr::gr_log_projector_direct(pp, qq).matrix()));
    roundtrip.add(rel(gr::gr_exp_projector(pp, l).matrix(), qq.matrix()));

    const Matrix r1 = random_orthogonal(rng, p), r2 = random_orthogonal(rng, p);
    const Matrix l1 = gr::gr_log_onb(gr::OnbPoint(u), gr::OnbPoint(v));
    const Matrix l2 = gr::gr_log_onb(gr::OnbPoint(u * r1), gr::OnbPoint(v * r2));
    const Matrix d1 = u * l1.transpose() + l1 * u.transpose();
    const Matrix d2 = u * r1 * l2.transpose() + l2 * (u * r1).transpose();
    gauge.add((d1 - d2).norm());
  }
  for (int t = 0; t < 100; ++t) {
    const Index n = 3 + uniform_index(rng, 5);
    const Index p = 1 + uniform_index(rng, n - 1);
    const gr::OnbPoint a = near_identity(rng, n, p, kHalfPi - 0.2);
    const gr::OnbPoint b = near_identity(rng, n, p, kHalfPi - 0.2);
    const gr::ProjectorPoint pa = gr::tau(a), pb = gr::tau(b);
    const gr::ProjectorPoint id = gr::ProjectorPoint::identity(n, p);
    ident.add(rel(gr::gr_add(id, pa).matrix(), pa.matrix()));
    inverse.add(rel(gr::gr_add(gr::gr_inv(pa), pa).matrix(), id.matrix()));
    cancel.add(rel(gr::gr_add(gr::gr_inv(pa), gr::gr_add(pa, pb)).matrix(), pb.matrix()));
    persp.add(rel(gr::tau(gr::gr_add_onb(a, b)).matrix(), gr::gr_add(pa, pb).matrix()));
  }
  return {log_eq.result(), roundtrip.result(), gauge.result(), ident.result(),
          inverse.result(), cancel.result(), persp.result()};
}

std::vector<PropertyResult> spsd_suite(std::uint64_t seed) {
  Rng rng = make_rng(seed, "suite/spsd");
  const std::string s = "spsd";
  const spsd::SpsdConfig cfg{};
  auto point = [&](Index n, Index p) {
    return spsd::StructurePoint(near_identity(rng, n, p, 0.6), random_spd(rng, p, 0.4, 2.5));
  };
  Property ident(s, "left identity", 1e-8), inverse(s, "left inverse", 1e-8),
      cancel(s, "left cancellation", 1e-8), spd_only(s, "zero Grassmann normal = SPD distance", 1e-12),
      gr_only(s, "zero SPD normal = Grassmann distance", 1e-10),
      gauge(s, "distance gauge invariance", 1e-9), batch(s, "batched = per-sample loop", 1e-10),
      frozen(s, "evaluation leaves state bit-identical", 0.0);
  for (int t = 0; t < 50; ++t) {
    const spsd::StructurePoint a = point(6, 2), b = point(6, 2);
    const spsd::StructurePoint id = spsd::StructurePoint::identity(6, 2);
    const spsd::StructurePoint ib = spsd::psd_add(cfg, id, b);
    ident.add(std::max(rel(ib.u.matrix(), b.u.matrix()), rel(ib.s.matrix(), b.s.matrix())));
    const spsd::StructurePoint z = spsd::psd_add(cfg, spsd::psd_inv(cfg, a), a);
    inverse.add(std::max(subspace_gap(z.u, id.u), rel(z.s.matrix(), id.s.matrix())));
    const spsd::StructurePoint c = spsd::psd_add(cfg, spsd::psd_inv(cfg, a), spsd::psd_add(cfg, a, b));
    cancel.add(std::max(subspace_gap(c.u, b.u), rel(c.s.matrix(), b.s.matrix())));

    const spsd::StructurePoint x = point(5, 2), p = point(5, 2);
    const SpdMatrix sw = random_spd(rng, 2);
    const spsd::SpsdHyperplane hs = spsd::make_hyperplane(cfg, p, {gr::OnbPoint::identity(5, 2), sw});
    spd_only.add(std::abs(spsd::psd_pseudo_gyrodistance(cfg, x, hs) -
                          spd::pseudo_gyrodistance(cfg.spd_metric, x.s,
                                                   spd::hyperplane_from_point(cfg.spd_metric, p.s, sw))));
    const gr::OnbPoint uw = near_identity(rng, 5, 2, 0.6);
    const spsd::SpsdHyperplane hg = spsd::make_hyperplane(cfg, p, {uw, SpdMatrix::identity(2)});
    const gr::ProjectorPoint zz = gr::gr_add(gr::gr_inv(gr::tau(p.u)), gr::tau(x.u));
    const double gterm = std::abs(gr::gr_inner(zz, gr::tau(uw))) /
                         std::sqrt(gr::gr_inner(gr::tau(uw), gr::tau(uw)));
    gr_only.add(std::abs(spsd::psd_pseudo_gyrodistance(cfg, x, hg) - gterm));

    const spsd::StructurePoint x3 = point(6, 3);
    const spsd::SpsdHyperplane h3 = spsd::make_hyperplane(cfg, point(6, 3), point(6, 3));
    auto rot = [&](const spsd::StructurePoint& q) {
      return spsd::StructurePoint(gr::OnbPoint(q.u.matrix() * random_orthogonal(rng, 3)), q.s);
    };
    gauge.add(std::abs(spsd::psd_pseudo_gyrodistance(cfg, rot(x3), {rot(h3.p), rot(h3.w)}) -
                       spsd::psd_pseudo_gyrodistance(cfg, x3, h3)));
  }

  const Index n = 6, p = 2;
  std::vector<SymMatrix> xs;
  for (int i = 0; i < 16; ++i) {
    const Matrix u = near_identity(rng, n, p, 0.6).matrix();
    xs.emplace_back(Matrix(u * random_spd(rng, p, 0.5, 3.0).matrix() * u.transpose()));
  }
  std::vector<spsd::SpsdHyperplane> cls;
  for (int c = 0; c < 3; ++c) cls.push_back(spsd::make_hyperplane(cfg, point(n, p), point(n, p)));
  spsd::CommonSubspaceState state(n, p);
  const Matrix before = state.um().matrix();
  (void)spsd::batch_pseudo_gyrodistances(cfg, xs, cls, state, false);
  frozen.add(state.um().matrix() == before ? 0.0 : 1.0);
  const Matrix d = spsd::batch_pseudo_gyrodistances(cfg, xs, cls, state, true);
  std::vector<gr::OnbPoint> us;
  for (const auto& x : xs) us.push_back(spsd::spsd_decompose(x, p).u);
  spsd::CommonSubspaceState loop(n, p);
  loop.update(us, cfg.gamma);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const spsd::StructurePoint sx = spsd::canonicalize(xs[i], us[i], loop.um());
    for (std::size_t c = 0; c < cls.size(); ++c) {
      batch.add(std::abs(d(static_cast<Index>(i), static_cast<Index>(c)) -
                         spsd::psd_pseudo_gyrodistance(cfg, sx, cls[c])));
    }
  }
  return {ident.result(),  inverse.result(), cancel.result(), spd_only.result(),
          gr_only.result(), gauge.result(),  batch.result(),  frozen.result()};
}

std::vector<PropertyResult> grad_suite(std::uint64_t seed) {
  std::vector<PropertyResult> out;
  for (const std::string& t : gradcheck_targets()) {
    Property p("grad", t, 1e-3);
    p.add(run_gradcheck(t, seed));
    out.push_back(p.result());
  }
  return out;
}

// Perturbs parameters away from their (often degenerate) initial values.
std::vector<Matrix> perturbed(const nn::ParamStore& store, Rng& rng, double sd) {
  std::vector<Matrix> x0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Matrix& v = store.value(i);
    x0.push_back(v + normal_matrix(rng, v.rows(), v.cols(), sd));
  }
  return x0;
}

Var weighted_sum(Var a, const Matrix& w) { return ad::sum(ad::hadamard(a, ad::constant_like(a, w))); }

double conv_check(Rng& rng, const spd::SpdMetric& g, Index n, Index m, Index window, Index len) {
  nn::ConvSpec spec{g, n, m, window, 1};
  nn::ParamStore store;
  nn::SpdConvLayer layer(spec, store, "conv", rng);
  std::vector<Matrix> x0 = perturbed(store, rng, 0.3);
  const std::size_t np = x0.size();
  for (Index i = 0; i < len; ++i) x0.push_back(normal_sym(rng, n, 0.5));
  const Matrix w = normal_matrix(rng, m, m);
  auto f = [&](Tape&, std::span<const Var> xs) {
    const auto pre = layer.prepare(xs.first(np));
    std::vector<Var> seq;
    for (std::size_t i = np; i < xs.size(); ++i) seq.push_back(nn::spd_param(xs[i]));
    Var loss;
    for (const Var& y : layer.forward(pre, seq)) {
      Var term = weighted_sum(y, w);
      loss = loss.valid() ? loss + term : term;
    }
    return loss;
  };
  return ad::gradcheck(f, x0).max_rel_err;
}

double spd_mlr_check(Rng& rng) {
  double worst = 0.0;
  for (const spd::SpdMetric& g : {kAI, kLE, kLC}) {
    nn::ParamStore store;
    nn::SpdMlrHead head(g, 3, 3, store, "mlr", rng);
    std::vector<Matrix> x0 = perturbed(store, rng, 0.3);
    const std::size_t np = x0.size();
    x0.push_back(normal_sym(rng, 3, 0.5));
    auto f = [&](Tape&, std::span<const Var> xs) {
      return ad::cross_entropy(head.logits(head.prepare(xs.first(np)), nn::spd_param(xs[np])), 1);
    };
    worst = std::max(worst, ad::gradcheck(f, x0).max_rel_err);
  }
  return worst;
}

double spsd_mlr_check(Rng& rng) {
  const Index m = 4, p = 2;
  nn::ParamStore store;
  nn::SpsdMlrHead head(spsd::SpsdConfig{}, m, p, 3, store, "mlr", rng);
  std::vector<Matrix> x0 = perturbed(store, rng, 0.2);
  const std::size_t np = x0.size();
  // Separated spectrum keeps the top-p subspace well defined.
  Matrix s = Matrix::Zero(m, m);
  s.diagonal() << 1.2, 0.6, -0.4, -1.0;
  const Matrix q = random_orthogonal(rng, m);
  x0.push_back(q * s * q.transpose() + normal_sym(rng, m, 0.05));
  const Matrix um = near_identity(rng, m, p, 0.4).matrix();
  auto f = [&](Tape&, std::span<const Var> xs) {
    return ad::cross_entropy(head.logits(head.prepare(xs.first(np)), nn::spd_param(xs[np]), um), 2);
  };
  return ad::gradcheck(f, x0).max_rel_err;
}

data::Graph small_graph(Rng& rng) {
  data::SbmOptions so;
  so.nodes = 8;
  so.p_in = 0.6;
  so.p_out = 0.1;
  so.seed = rng();
  data::Graph g = data::synth_sbm_graph(so);
  data::normalize_feature_rows(g);
  return g;
}

double gcn_check(Rng& rng, int layers, nn::GrPerspective persp, bool head_only) {
  const data::Graph g = small_graph(rng);
  nn::GcnSpec spec;
  spec.perspective = persp;
  spec.layers = layers;
  spec.feature_dim = g.features.cols();
  spec.classes = g.classes;
  nn::GcnModel model(spec, rng());
  const nn::ParamStore& store = model.params();
  std::vector<Matrix> all = perturbed(store, rng, 0.2);
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!head_only || store.name(i).rfind("head.", 0) == 0) leaves.push_back(i);
  }
  std::vector<Matrix> x0;
  for (std::size_t i : leaves) x0.push_back(all[i]);
  auto f = [&](Tape& t, std::span<const Var> xs) {
    std::vector<Var> bound;
    std::size_t k = 0;
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (k < leaves.size() && leaves[k] == i) {
        bound.push_back(xs[k++]);
      } else {
        bound.push_back(t.constant(all[i]));
      }
    }
    return nn::mean_cross_entropy(model.logits(bound, g), g.labels);
  };
  return ad::gradcheck(f, x0).max_rel_err;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"gyro", "basis", "grassmann", "spsd", "grad"};
  return names;
}

bool is_suite(std::string_view name) {
  if (name == "all") return true;
  const auto& n = suite_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::vector<PropertyResult> run_suite(std::string_view name, std::uint64_t seed) {
  if (name == "all") {
    std::vector<PropertyResult> out;
    for (const std::string& s : suite_names()) {
      auto r = run_suite(s, seed);
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }
  if (name == "gyro") return gyro_suite(seed);
  if (name == "basis") return basis_suite(seed);
  if (name == "grassmann") return grassmann_suite(seed);
  if (name == "spsd") return spsd_suite(seed);
  if (name == "grad") return grad_suite(seed);
  throw ArgumentError("unknown suite '" + std::string(name) + "'");
}

std::string format_table(const std::vector<PropertyResult>& results) {
  std::size_t ws = 5, wp = 8;
  for (const auto& r : results) {
    ws = std::max(ws, r.suite.size());
    wp = std::max(wp, r.property.size());
  }
  std::ostringstream out;
  char buf[64];
  auto row = [&](const std::string& a, const std::string& b, const std::string& c,
                 const std::string& d, const std::string& e, const std::string& f) {
    out << a << std::string(ws + 2 - a.size(), ' ') << b << std::string(wp + 2 - b.size(), ' ');
    std::snprintf(buf, sizeof buf, "%6s  %12s  %9s  %s\n", c.c_str(), d.c_str(), e.c_str(), f.c_str());
    out << buf;
  };
  row("suite", "property", "cases", "max_resid", "tol", "result");
  int passed = 0;
  for (const auto& r : results) {
    char res[32], tol[32];
    std::snprintf(res, sizeof res, "%.3e", r.max_residual);
    std::snprintf(tol, sizeof tol, "%.0e", r.tolerance);
    row(r.suite, r.property, std::to_string(r.cases), res, tol, r.pass ? "PASS" : "FAIL");
    passed += r.pass ? 1 : 0;
  }
  out << passed << "/" << results.size() << " properties passed\n";
  return out.str();
}

void write_report(const std::filesystem::path& path, const std::vector<PropertyResult>& results) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "suite,property,cases,max_residual,tolerance,pass\n";
  for (const auto& r : results) {
    out << r.suite << ',' << r.property << ',' << r.cases << ',' << format_double(r.max_residual) << ','
        << format_double(r.tolerance) << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

const std::vector<std::string>& gradcheck_targets() {
  static const std::vector<std::string> t{"spd-fc-le",  "spd-fc-ai",    "spd-fc-lc",
                                          "spd-conv",   "spd-mlr",      "spsd-mlr",
                                          "gr-gcn-embed", "gr-gcn-layer", "gr-gcn-head"};
  return t;
}

bool is_gradcheck_target(std::string_view name) {
  const auto& t = gradcheck_targets();
  return std::find(t.begin(), t.end(), name) != t.end();
}

double run_gradcheck(std::string_view target, std::uint64_t seed) {
  if (!is_gradcheck_target(target)) throw ArgumentError("unknown gradcheck target '" + std::string(target) + "'");
  Rng rng = make_rng(seed, "gradcheck/" + std::string(target));
  if (target == "spd-fc-le") return conv_check(rng, kLE, 4, 3, 1, 1);
  if (target == "spd-fc-ai") return conv_check(rng, kAI, 4, 3, 1, 1);
  if (target == "spd-fc-lc") return conv_check(rng, kLC, 4, 3, 1, 1);
  if (target == "spd-conv") return conv_check(rng, kAI, 3, 2, 2, 3);
  if (target == "spd-mlr") return spd_mlr_check(rng);
  if (target == "spsd-mlr") return spsd_mlr_check(rng);
  if (target == "gr-gcn-embed") return gcn_check(rng, 0, nn::GrPerspective::Projector, false);
  if (target == "gr-gcn-head") return gcn_check(rng, 0, nn::GrPerspective::Projector, true);
  return std::max(gcn_check(rng, 1, nn::GrPerspective::Projector, false),
                  gcn_check(rng, 1, nn::GrPerspective::Onb, false));
}

}  // namespace gyromat::suites
