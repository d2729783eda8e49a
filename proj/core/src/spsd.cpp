#include "gyromat/spsd.hpp"

#include <cmath>
#include <string>

namespace gyromat::spsd {

using ad::Tape;
using ad::Var;

StructurePoint::StructurePoint(gr::OnbPoint u_, SpdMatrix s_) : u(std::move(u_)), s(std::move(s_)) {
  if (u.p() != s.size()) {
    throw ArgumentError("StructurePoint: U has " + std::to_string(u.p()) + " columns but S is " +
                        std::to_string(s.size()) + "x" + std::to_string(s.size()));
  }
}

StructurePoint StructurePoint::identity(Index n, Index p) {
  return {gr::OnbPoint::identity(n, p), SpdMatrix::identity(p)};
}

void validate(const SpsdConfig& cfg, Index p) {
  if (!(cfg.lambda > 0.0)) throw ConfigError("spsd: lambda must be > 0");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("spsd: gamma must be in [0,1]");
  spd::validate(cfg.spd_metric, p);
}

namespace {

void same_shape(const StructurePoint& a, const StructurePoint& b, std::string_view op) {
  if (a.n() != b.n() || a.p() != b.p()) throw ArgumentError(std::string(op) + ": shape mismatch");
}

double gr_inner_onb(const Matrix& a, const Matrix& b) {
  return 0.5 * (gr::log_identity(gr::tau(gr::OnbPoint(a))) *
                gr::log_identity(gr::tau(gr::OnbPoint(b))))
                   .trace();
}

}  // namespace

SpsdHyperplane make_hyperplane(const SpsdConfig& cfg, const StructurePoint& p,
                               const StructurePoint& w) {
  same_shape(p, w, "make_hyperplane");
  SpsdHyperplane h{p, w};
  if (psd_normal_norm(cfg, h) < 1e-12) {
    throw DegenerateHyperplaneError("structure-space hypergyroplane has a zero normal");
  }
  return h;
}

Decomposition spsd_decompose(const SymMatrix& x, Index p) {
  const Index n = x.size();
  if (p < 1 || p > n) throw ArgumentError("spsd_decompose: need 1 <= p <= n");
  SymEig e = sym_eig(x.matrix());
  if (e.values(n - 1) < -1e-8 * std::max(1.0, std::abs(e.values(0)))) {
    throw DomainError("spsd_decompose: input is not PSD", e.values(n - 1));
  }
  if (e.values(p - 1) <= 1e-10) {
    throw RankError("spsd_decompose: numerical rank below p=" + std::to_string(p));
  }
  return {gr::OnbPoint(e.vectors.leftCols(p)), SpdMatrix(Matrix(e.values.head(p).asDiagonal()))};
}

StructurePoint canonicalize(const SymMatrix& x, const gr::OnbPoint& ux, const gr::OnbPoint& w) {
  if (ux.n() != x.size() || w.n() != ux.n() || w.p() != ux.p()) {
    throw ArgumentError("canonicalize: shape mismatch");
  }
  ThinSvd s = svd_thin(ux.matrix().transpose() * w.matrix());
  if (s.sigma.minCoeff() < 1e-10) {
    throw RankError("canonicalize: U_X^T W is singular (subspaces not alignable)");
  }
  const Matrix ubar = ux.matrix() * s.u;
  const Matrix sbar = s.v * ubar.transpose() * x.matrix() * ubar * s.v.transpose();
  Matrix uc = ubar * s.v.transpose();
  return {gr::OnbPoint(uc), SpdMatrix(sbar)};
}

StructurePoint psd_add(const SpsdConfig& cfg, const StructurePoint& a, const StructurePoint& b) {
  same_shape(a, b, "psd_add");
  return {gr::gr_add_onb(a.u, b.u), spd::spd_add(cfg.spd_metric, a.s, b.s)};
}

StructurePoint psd_inv(const SpsdConfig& cfg, const StructurePoint& a) {
  return {gr::gr_inv_onb(a.u), spd::spd_inv(cfg.spd_metric, a.s)};
}

double psd_inner(const SpsdConfig& cfg, const StructurePoint& a, const StructurePoint& b) {
  same_shape(a, b, "psd_inner");
  return cfg.lambda * gr_inner_onb(a.u, b.u) + spd::spd_inner(cfg.spd_metric, a.s, b.s);
}

double psd_norm(const SpsdConfig& cfg, const StructurePoint& a) {
  return std::sqrt(std::max(0.0, psd_inner(cfg, a, a)));
}

double psd_gyrodistance(const SpsdConfig& cfg, const StructurePoint& a, const StructurePoint& b) {
  return psd_norm(cfg, psd_add(cfg, psd_inv(cfg, a), b));
}

double psd_signed_numerator(const SpsdConfig& cfg, const StructurePoint& x,
                            const SpsdHyperplane& h) {
  same_shape(x, h.p, "psd_pseudo_gyrodistance");
  const Matrix z = gr::gr_add_onb(gr::gr_inv_onb(h.p.u), x.u).matrix();
  const SpdMatrix y = spd::spd_add(cfg.spd_metric, spd::spd_inv(cfg.spd_metric, h.p.s), x.s);
  return cfg.lambda * gr_inner_onb(z, h.w.u) + spd::spd_inner(cfg.spd_metric, y, h.w.s);
}

double psd_normal_norm(const SpsdConfig& cfg, const SpsdHyperplane& h) {
  return psd_norm(cfg, h.w);
}

double psd_pseudo_gyrodistance(const SpsdConfig& cfg, const StructurePoint& x,
                               const SpsdHyperplane& h) {
  const double den = psd_normal_norm(cfg, h);
  if (den == 0.0) throw DegenerateHyperplaneError("structure-space hypergyroplane has a zero normal");
  return std::abs(psd_signed_numerator(cfg, x, h)) / den;
}

gr::OnbPoint gr_exp_onb(const gr::OnbPoint& u, const Matrix& t) {
  if (t.rows() != u.n() || t.cols() != u.p()) throw ArgumentError("gr_exp_onb: shape mismatch");
  ThinSvd s = svd_thin(t);
  const Vector c = s.sigma.array().cos();
  const Vector sn = s.sigma.array().sin();
  return gr::OnbPoint(u.matrix() * s.v * c.asDiagonal() * s.v.transpose() +
                      s.u * sn.asDiagonal() * s.v.transpose());
}

gr::OnbPoint gr_mean(const std::vector<gr::OnbPoint>& us, int max_iter, double tol) {
  if (us.empty()) throw ArgumentError("gr_mean: empty input");
  gr::OnbPoint m = us.front();
  double res = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Matrix t = Matrix::Zero(m.n(), m.p());
    for (const gr::OnbPoint& u : us) t += gr::gr_log_onb(m, u);
    t /= static_cast<double>(us.size());
    res = t.norm();
    if (res < tol) return m;
    m = gr_exp_onb(m, t);
  }
  throw ConvergenceError("gr_mean: no convergence in " + std::to_string(max_iter) + " iterations",
                         res);
}

gr::OnbPoint gr_geodesic(const gr::OnbPoint& u, const gr::OnbPoint& v, double gamma) {
  return gr_exp_onb(u, gamma * gr::gr_log_onb(u, v));
}

void CommonSubspaceState::update(const std::vector<gr::OnbPoint>& us, double gamma) {
  um_ = gr_geodesic(um_, gr_mean(us), gamma);
}

namespace {

struct ClassCache {
  Matrix rot;   // rotation realising -U_P (+) .
  Matrix w1;    // Log_I of U_W U_W^T
  SpdMatrix sp_inv;
  double den;
};

}  // namespace

Matrix batch_pseudo_gyrodistances(const SpsdConfig& cfg, const std::vector<SymMatrix>& xs,
                                  const std::vector<SpsdHyperplane>& classes,
                                  CommonSubspaceState& state, bool training) {
  const Index n = state.um().n(), p = state.um().p();
  std::vector<gr::OnbPoint> us;
  us.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    try {
      us.push_back(spsd_decompose(xs[i], p).u);
    } catch (const RankError& e) {
      throw RankError("sample " + std::to_string(i) + ": " + e.what());
    }
  }
  if (training && !us.empty()) state.update(us, cfg.gamma);

  std::vector<ClassCache> cache;
  for (const SpsdHyperplane& h : classes) {
    if (h.p.n() != n || h.p.p() != p) throw ArgumentError("batch: class shape mismatch");
    const Matrix lp = gr::log_identity(gr::tau(h.p.u));
    const double den = psd_normal_norm(cfg, h);
    if (den == 0.0) throw DegenerateHyperplaneError("structure-space hypergyroplane has a zero normal");
    cache.push_back({mat_exp(-gr::commutator_identity(lp, p)), gr::log_identity(gr::tau(h.w.u)),
                     spd::spd_inv(cfg.spd_metric, h.p.s), den});
  }

  Matrix d(static_cast<Index>(xs.size()), static_cast<Index>(classes.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    StructurePoint x = canonicalize(xs[i], us[i], state.um());
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const ClassCache& k = cache[c];
      const gr::OnbPoint z(k.rot * x.u.matrix());
      const double g1 = 0.5 * (gr::log_identity(gr::tau(z)) * k.w1).trace();
      const double g2 = spd::spd_inner(cfg.spd_metric,
                                       spd::spd_add(cfg.spd_metric, k.sp_inv, x.s), classes[c].w.s);
      d(static_cast<Index>(i), static_cast<Index>(c)) = std::abs(cfg.lambda * g1 + g2) / k.den;
    }
  }
  return d;
}

namespace var {

Var decompose(Var x, Index p) {
  ad::EigVars e = ad::sym_eig(x);
  if (e.values.value()(p - 1, 0) <= 1e-10) {
    throw RankError("spsd decompose: numerical rank below p=" + std::to_string(p));
  }
  return ad::block(e.vectors, 0, 0, x.rows(), p);
}

StructureVars canonicalize(Var x, Var ux, const Matrix& um) {
  Var m = ad::transpose(ux) * ad::constant_like(ux, um);
  Var r = m * ad::spd_fn(ad::transpose(m) * m, ad::fn::invsqrt);
  Var u = ux * r;
  return {u, ad::sym(ad::transpose(u) * x * u)};
}

namespace {

Var gr_inner_onb(Var a_log, Var b_log) { return 0.5 * ad::trace(a_log * b_log); }

}  // namespace

Var signed_numerator(const SpsdConfig& cfg, const StructureVars& x, const HyperplaneVars& h) {
  const Index p = x.u.cols();
  Var lp = gr::var::log_identity_onb(h.up);
  Var z = ad::mat_exp(-gr::var::commutator_identity(lp, p)) * x.u;
  Var g1 = gr_inner_onb(gr::var::log_identity_onb(z), gr::var::log_identity_onb(h.uw));
  const spd::SpdMetric& g = cfg.spd_metric;
  Var y = spd::var::spd_add(g, spd::var::spd_inv(g, h.sp), x.s);
  return cfg.lambda * g1 + spd::var::spd_inner(g, y, h.sw);
}

Var normal_norm(const SpsdConfig& cfg, const HyperplaneVars& h) {
  Var w1 = gr::var::log_identity_onb(h.uw);
  Var sq = cfg.lambda * gr_inner_onb(w1, w1) + spd::var::spd_inner(cfg.spd_metric, h.sw, h.sw);
  return ad::spd_fn(sq, ad::fn::sqrt);
}

}  // namespace var

}  // namespace gyromat::spsd
