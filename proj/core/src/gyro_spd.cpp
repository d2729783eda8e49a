#include "gyromat/gyro_spd.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gyromat::spd {

using ad::Tape;
using ad::Var;

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::AI: return "ai";
    case Metric::LE: return "le";
    case Metric::LC: return "lc";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "ai" || s == "AI") return Metric::AI;
  if (s == "le" || s == "LE") return Metric::LE;
  if (s == "lc" || s == "LC") return Metric::LC;
  throw ArgumentError("unknown SPD metric '" + std::string(s) + "' (expected ai, le or lc)");
}

void validate(const SpdMetric& g, Index m) {
  if (g.tag == Metric::AI && !(g.beta > -1.0 / static_cast<double>(m))) {
    throw ArgumentError("AI metric needs beta > -1/m; got beta=" + std::to_string(g.beta) +
                        " with m=" + std::to_string(m));
  }
}

namespace {

void same_size(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows()) {
    throw ArgumentError(std::string(op) + ": size mismatch " + std::to_string(a.rows()) + " vs " +
                        std::to_string(b.rows()));
  }
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix unit(Index m, Index i, Index j) {
  Matrix e = Matrix::Zero(m, m);
  e(i, j) = 1.0;
  return e;
}

}  // namespace

namespace var {

Var lift(const SpdMetric& g, Var p) {
  if (g.tag == Metric::LC) {
    Var l = ad::cholesky(p);
    return ad::lower_strict(l) + ad::diag_map(l, ad::fn::log);
  }
  return ad::spd_fn(p, MatFn::Log);
}

Var spd_add(const SpdMetric& g, Var p, Var q) {
  switch (g.tag) {
    case Metric::AI: {
      Var s = ad::spd_fn(p, MatFn::Sqrt);
      return ad::sym(s * q * s);
    }
    case Metric::LE:
      return ad::spd_fn(ad::spd_fn(p, MatFn::Log) + ad::spd_fn(q, MatFn::Log), MatFn::Exp);
    case Metric::LC: {
      Var lp = ad::cholesky(p);
      Var lq = ad::cholesky(q);
      Var l = ad::lower_strict(lp) + ad::lower_strict(lq) + ad::diag_part(lp) * ad::diag_part(lq);
      return l * ad::transpose(l);
    }
  }
  throw ArgumentError("spd_add: bad metric");
}

Var spd_inv(const SpdMetric& g, Var p) {
  if (g.tag == Metric::LC) {
    Var lp = ad::cholesky(p);
    Var l = ad::diag_map(lp, ad::fn::recip) - ad::lower_strict(lp);
    return l * ad::transpose(l);
  }
  return ad::spd_fn(p, ad::fn::recip);
}

Var spd_inner(const SpdMetric& g, Var p, Var q) {
  Var a = lift(g, p);
  Var b = lift(g, q);
  Var v = ad::dot(a, b);
  if (g.tag == Metric::AI && g.beta != 0.0) v = v + g.beta * (ad::trace(a) * ad::trace(b));
  return v;
}

Var fc_assemble(const SpdMetric& g, Index m, std::span<const Var> v) {
  const auto pairs = upper_pairs(m);
  if (v.size() != pairs.size()) throw ArgumentError("fc_assemble: wrong number of unit values");
  std::vector<Matrix> mats;
  std::vector<Var> scalars(v.begin(), v.end());
  if (g.tag == Metric::LC) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      if (i == j) {
        scalars[k] = ad::cwise(v[k], ad::fn::exp);
        mats.push_back(unit(m, i, i));
      } else {
        mats.push_back(unit(m, j, i));
      }
    }
    Var ybar = ad::linear_combination(scalars, mats);
    return ybar * ad::transpose(ybar);
  }
  const double beta = g.tag == Metric::AI ? g.beta : 0.0;
  const double alpha = (std::sqrt(1.0 + static_cast<double>(m) * beta) - 1.0) / static_cast<double>(m);
  for (const auto& [i, j] : pairs) {
    if (i == j) {
      Matrix e = unit(m, i, i);
      e.diagonal().array() += alpha;
      mats.push_back(e);
    } else {
      mats.push_back((unit(m, i, j) + unit(m, j, i)) / std::numbers::sqrt2);
    }
  }
  return ad::spd_fn(ad::linear_combination(scalars, mats), MatFn::Exp);
}

}  // namespace var

namespace {

template <class F>
Matrix eval(F&& f) {
  Tape t(false);
  return f(t).value();
}

}  // namespace

SpdMatrix spd_add(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q) {
  same_size(p, q, "spd_add");
  return SpdMatrix(eval([&](Tape& t) { return var::spd_add(g, t.constant(p), t.constant(q)); }));
}

SpdMatrix spd_inv(const SpdMetric& g, const SpdMatrix& p) {
  return SpdMatrix(eval([&](Tape& t) { return var::spd_inv(g, t.constant(p)); }));
}

double spd_inner(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q) {
  same_size(p, q, "spd_inner");
  return eval([&](Tape& t) { return var::spd_inner(g, t.constant(p), t.constant(q)); })(0, 0);
}

double spd_norm(const SpdMetric& g, const SpdMatrix& p) {
  return std::sqrt(std::max(0.0, spd_inner(g, p, p)));
}

SpdMatrix gyration(const SpdMetric& g, const SpdMatrix& a, const SpdMatrix& b,
                   const SpdMatrix& c) {
  return spd_add(g, spd_inv(g, spd_add(g, a, b)), spd_add(g, a, spd_add(g, b, c)));
}

Matrix lift(const SpdMetric& g, const SpdMatrix& p) {
  return eval([&](Tape& t) { return var::lift(g, t.constant(p)); });
}

Matrix lift_tangent(const SpdMetric& g, const Matrix& v) {
  if (g.tag == Metric::LC) return half_lower(sym(v));
  return sym(v);
}

namespace {

struct AiRoots {
  Matrix sqrt;
  Matrix invsqrt;
};

AiRoots ai_roots(const SpdMatrix& p) {
  SymEig e = sym_eig(p.matrix());
  const Vector s = e.values.cwiseSqrt();
  return {e.vectors * s.asDiagonal() * e.vectors.transpose(),
          e.vectors * s.cwiseInverse().asDiagonal() * e.vectors.transpose()};
}

// Cholesky tangent X at L from an SPD tangent V at L L^T, and back.
Matrix lc_to_chol(const Matrix& l, const Matrix& v) {
  const auto lt = l.triangularView<Eigen::Lower>();
  Matrix y = lt.solve(v);
  y = lt.solve(y.transpose()).transpose();
  return l * half_lower(y);
}

Matrix lc_to_spd(const Matrix& l, const Matrix& x) {
  return l * x.transpose() + x * l.transpose();
}

}  // namespace

SymMatrix log_map(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q) {
  same_size(p, q, "log_map");
  switch (g.tag) {
    case Metric::AI: {
      AiRoots r = ai_roots(p);
      return SymMatrix(r.sqrt * spd_fn(sym(r.invsqrt * q.matrix() * r.invsqrt), MatFn::Log) *
                       r.sqrt);
    }
    case Metric::LE:
      return SymMatrix(spd_fn(q.matrix(), MatFn::Log) - spd_fn(p.matrix(), MatFn::Log));
    case Metric::LC: {
      const Matrix l = cholesky(p.matrix());
      const Matrix k = cholesky(q.matrix());
      Matrix x = lower_strict(k) - lower_strict(l);
      for (Index i = 0; i < l.rows(); ++i) x(i, i) = l(i, i) * std::log(k(i, i) / l(i, i));
      return SymMatrix(lc_to_spd(l, x));
    }
  }
  throw ArgumentError("log_map: bad metric");
}

SpdMatrix exp_map(const SpdMetric& g, const SpdMatrix& p, const SymMatrix& v) {
  same_size(p, v, "exp_map");
  switch (g.tag) {
    case Metric::AI: {
      AiRoots r = ai_roots(p);
      return SpdMatrix(r.sqrt * spd_fn(sym(r.invsqrt * v.matrix() * r.invsqrt), MatFn::Exp) *
                       r.sqrt);
    }
    case Metric::LE:
      return SpdMatrix(spd_fn(Matrix(spd_fn(p.matrix(), MatFn::Log) + v.matrix()), MatFn::Exp));
    case Metric::LC: {
      const Matrix l = cholesky(p.matrix());
      const Matrix x = lc_to_chol(l, v.matrix());
      Matrix k = lower_strict(l) + lower_strict(x);
      for (Index i = 0; i < l.rows(); ++i) k(i, i) = l(i, i) * std::exp(x(i, i) / l(i, i));
      return SpdMatrix(k * k.transpose());
    }
  }
  throw ArgumentError("exp_map: bad metric");
}

SymMatrix transport(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q,
                    const SymMatrix& v) {
  same_size(p, q, "transport");
  switch (g.tag) {
    case Metric::AI: {
      AiRoots r = ai_roots(p);
      const Matrix mid = spd_fn(sym(r.invsqrt * q.matrix() * r.invsqrt), MatFn::Sqrt);
      const Matrix e = r.sqrt * mid * r.invsqrt;
      return SymMatrix(e * v.matrix() * e.transpose());
    }
    case Metric::LE:
      return v;
    case Metric::LC: {
      const Matrix l = cholesky(p.matrix());
      const Matrix k = cholesky(q.matrix());
      const Matrix x = lc_to_chol(l, v.matrix());
      Matrix y = lower_strict(x);
      for (Index i = 0; i < l.rows(); ++i) y(i, i) = k(i, i) / l(i, i) * x(i, i);
      return SymMatrix(lc_to_spd(k, y));
    }
  }
  throw ArgumentError("transport: bad metric");
}

double metric_at(const SpdMetric& g, const SpdMatrix& p, const SymMatrix& v, const SymMatrix& w) {
  switch (g.tag) {
    case Metric::AI: {
      Eigen::LLT<Matrix> llt(p.matrix());
      const Matrix a = llt.solve(v.matrix());
      const Matrix b = llt.solve(w.matrix());
      return (a * b).trace() + g.beta * a.trace() * b.trace();
    }
    case Metric::LE:
      return frob(v, w);
    case Metric::LC: {
      const Matrix l = cholesky(p.matrix());
      const Matrix x = lc_to_chol(l, v.matrix());
      const Matrix y = lc_to_chol(l, w.matrix());
      double s = frob(lower_strict(x), lower_strict(y));
      for (Index i = 0; i < l.rows(); ++i) s += x(i, i) * y(i, i) / (l(i, i) * l(i, i));
      return s;
    }
  }
  throw ArgumentError("metric_at: bad metric");
}

std::vector<std::pair<Index, Index>> upper_pairs(Index m) {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) out.emplace_back(i, j);
  return out;
}

std::vector<SpdMatrix> spd_basis(const SpdMetric& g, Index m) {
  if (m < 1) throw ArgumentError("spd_basis: m must be >= 1");
  validate(g, m);
  std::vector<SpdMatrix> out;
  const Matrix id = Matrix::Identity(m, m);
  const double md = static_cast<double>(m);
  const double beta = g.tag == Metric::AI ? g.beta : 0.0;
  const double c = (1.0 - 1.0 / std::sqrt(1.0 + md * beta)) / md;
  for (const auto& [i, j] : upper_pairs(m)) {
    if (g.tag == Metric::LC) {
      if (i == j) {
        out.emplace_back(Matrix((std::exp(2.0) - 1.0) * unit(m, i, i) + id));
      } else {
        out.emplace_back(Matrix((unit(m, j, i) + id) * (unit(m, i, j) + id)));
      }
    } else if (i == j) {
      out.emplace_back(spd_fn(Matrix(unit(m, i, i) - c * id), MatFn::Exp));
    } else {
      out.emplace_back(spd_fn(Matrix((unit(m, i, j) + unit(m, j, i)) / std::numbers::sqrt2),
                              MatFn::Exp));
    }
  }
  return out;
}

namespace {

void require_nondegenerate(const SpdMetric& g, const SymMatrix& a) {
  if (lift_tangent(g, a.matrix()).norm() == 0.0) {
    throw DegenerateHyperplaneError("SPD hypergyroplane has a zero normal");
  }
}

}  // namespace

SpdHyperplane hyperplane_from_point(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& w) {
  SpdHyperplane h{p, log_map(g, SpdMatrix::identity(p.size()), w)};
  require_nondegenerate(g, h.a);
  return h;
}

SpdHyperplane hyperplane_from_tangent(const SpdMetric& g, const SpdMatrix& p,
                                      const SymMatrix& w_at_p) {
  SpdHyperplane h{p, transport(g, p, SpdMatrix::identity(p.size()), w_at_p)};
  require_nondegenerate(g, h.a);
  return h;
}

double signed_numerator(const SpdMetric& g, const SpdMatrix& x, const SpdHyperplane& h) {
  same_size(x, h.p, "pseudo_gyrodistance");
  const Matrix c = lift(g, spd_add(g, spd_inv(g, h.p), x));
  return frob(c, lift_tangent(g, h.a.matrix()));
}

double signed_pseudo_gyrodistance(const SpdMetric& g, const SpdMatrix& x,
                                  const SpdHyperplane& h) {
  const double den = lift_tangent(g, h.a.matrix()).norm();
  if (den == 0.0) throw DegenerateHyperplaneError("SPD hypergyroplane has a zero normal");
  return signed_numerator(g, x, h) / den;
}

double pseudo_gyrodistance(const SpdMetric& g, const SpdMatrix& x, const SpdHyperplane& h) {
  return std::abs(signed_pseudo_gyrodistance(g, x, h));
}

double pseudo_gyrodistance_ai_closed(const SpdMatrix& x, const SpdMatrix& p, const SymMatrix& w) {
  AiRoots r = ai_roots(p);
  const Matrix a = sym(r.invsqrt * w.matrix() * r.invsqrt);
  const double den = a.norm();
  if (den == 0.0) throw DegenerateHyperplaneError("zero normal");
  const Matrix lx = spd_fn(sym(r.invsqrt * x.matrix() * r.invsqrt), MatFn::Log);
  return std::abs(frob(lx, a)) / den;
}

double pseudo_gyrodistance_lc_closed(const SpdMatrix& x, const SpdMatrix& p, const SymMatrix& w) {
  const Matrix l = cholesky(p.matrix());
  const Matrix k = cholesky(x.matrix());
  const Index n = l.rows();
  Matrix a = lower_strict(k) - lower_strict(l);
  for (Index i = 0; i < n; ++i) a(i, i) = std::log(k(i, i) / l(i, i));
  const Matrix wt = lc_to_chol(l, w.matrix());
  Matrix b = lower_strict(wt);
  for (Index i = 0; i < n; ++i) b(i, i) = wt(i, i) / l(i, i);
  const double den = b.norm();
  if (den == 0.0) throw DegenerateHyperplaneError("zero normal");
  return std::abs(frob(a, b)) / den;
}

Vector spd_mlr_logits(const SpdMetric& g, const SpdMatrix& x,
                      const std::vector<SpdHyperplane>& classes) {
  if (classes.size() < 2) throw ArgumentError("spd_mlr_logits: needs at least 2 classes");
  Vector z(static_cast<Index>(classes.size()));
  for (std::size_t c = 0; c < classes.size(); ++c) {
    require_nondegenerate(g, classes[c].a);
    z(static_cast<Index>(c)) = signed_numerator(g, x, classes[c]);
  }
  return z;
}

FcParams fc_identity_params(const SpdMetric& g, Index m) {
  FcParams out;
  out.w = spd_basis(g, m);
  out.p.assign(out.w.size(), SpdMatrix::identity(m));
  return out;
}

double fc_unit_value(const SpdMetric& g, const SpdMatrix& x, const SpdMatrix& p,
                     const SpdMatrix& w) {
  same_size(x, p, "fc_unit_value");
  same_size(x, w, "fc_unit_value");
  return frob(lift(g, spd_add(g, spd_inv(g, p), x)), lift(g, w));
}

SpdMatrix fc_assemble(const SpdMetric& g, Index m, const Vector& v) {
  validate(g, m);
  Tape t(false);
  std::vector<Var> vs;
  for (Index k = 0; k < v.size(); ++k) vs.push_back(t.constant(Matrix::Constant(1, 1, v(k))));
  return SpdMatrix(var::fc_assemble(g, m, vs).value());
}

SpdMatrix spd_fc_forward(const SpdMetric& g, const SpdMatrix& x, const FcParams& params, Index m) {
  const std::size_t units = upper_pairs(m).size();
  if (params.p.size() != units || params.w.size() != units) {
    throw ArgumentError("spd_fc_forward: expected " + std::to_string(units) +
                        " parameter pairs for output size " + std::to_string(m));
  }
  Vector v(static_cast<Index>(units));
  for (std::size_t k = 0; k < units; ++k) {
    v(static_cast<Index>(k)) = fc_unit_value(g, x, params.p[k], params.w[k]);
  }
  return fc_assemble(g, m, v);
}

Index conv_output_count(Index len, Index window, Index stride) {
  if (window < 1 || stride < 1) throw ArgumentError("conv: window and stride must be >= 1");
  if (window > len) {
    throw ArgumentError("conv: window " + std::to_string(window) + " longer than sequence " +
                        std::to_string(len));
  }
  return (len - window) / stride + 1;
}

std::vector<SpdMatrix> spd_conv_forward(const SpdMetric& g, const std::vector<SpdMatrix>& seq,
                                        Index window, Index stride, Index m,
                                        const FcParams& params) {
  const Index count = conv_output_count(static_cast<Index>(seq.size()), window, stride);
  std::vector<SpdMatrix> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index t = 0; t < count; ++t) {
    const auto first = seq.begin() + t * stride;
    std::vector<SpdMatrix> win(first, first + window);
    out.push_back(spd_fc_forward(g, concat_spd(win), params, m));
  }
  return out;
}

}  // namespace gyromat::spd
