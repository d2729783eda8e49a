#include "gyromat/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gyromat::gr {

using ad::Tape;
using ad::Var;

OnbPoint::OnbPoint(const Matrix& u) {
  require_finite(u, "OnbPoint");
  if (u.cols() > u.rows() || u.cols() < 1) throw TypeError("OnbPoint: needs 1 <= p <= n");
  if ((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm() > 1e-10) {
    throw TypeError("OnbPoint: columns are not orthonormal");
  }
  u_ = u;
}

OnbPoint OnbPoint::identity(Index n, Index p) { return OnbPoint(tilde_np(n, p)); }

ProjectorPoint::ProjectorPoint(const Matrix& p) {
  require_square(p, "ProjectorPoint");
  require_finite(p, "ProjectorPoint");
  Matrix s = 0.5 * (p + p.transpose());
  if ((p - p.transpose()).norm() > 1e-9) throw TypeError("ProjectorPoint: not symmetric");
  if ((s * s - s).norm() > 1e-9) throw TypeError("ProjectorPoint: not idempotent");
  const double tr = s.trace();
  const double r = std::round(tr);
  if (std::abs(tr - r) > 1e-9 || r < 1 || r > static_cast<double>(s.rows())) {
    throw TypeError("ProjectorPoint: trace is not an admissible rank");
  }
  SymEig e = sym_eig(s);
  for (Index i = 0; i < e.values.size(); ++i) {
    const double lam = e.values(i);
    if (std::min(std::abs(lam), std::abs(lam - 1.0)) > 1e-8) {
      throw TypeError("ProjectorPoint: eigenvalue outside {0,1}");
    }
  }
  m_ = s;
  rank_ = static_cast<Index>(r);
}

ProjectorPoint ProjectorPoint::identity(Index n, Index p) { return ProjectorPoint(ident_np(n, p)); }

GrTangent::GrTangent(const ProjectorPoint& base, const Matrix& delta) {
  require_square(delta, "GrTangent");
  require_finite(delta, "GrTangent");
  if (delta.rows() != base.n()) throw ArgumentError("GrTangent: size mismatch with base point");
  const Matrix& p = base.matrix();
  const double scale = std::max(1.0, delta.norm());
  if ((delta - delta.transpose()).norm() > 1e-9 * scale ||
      (p * delta + delta * p - delta).norm() > 1e-9 * scale) {
    throw ArgumentError("GrTangent: tangent condition P D + D P = D violated");
  }
  d_ = 0.5 * (delta + delta.transpose());
}

Matrix ident_np(Index n, Index p) {
  Matrix m = Matrix::Zero(n, n);
  m.topLeftCorner(p, p).setIdentity();
  return m;
}

Matrix tilde_np(Index n, Index p) { return Matrix::Identity(n, p); }

ProjectorPoint tau(const OnbPoint& u) {
  return ProjectorPoint(u.matrix() * u.matrix().transpose());
}

OnbPoint tau_inv(const ProjectorPoint& p) {
  SymEig e = sym_eig(p.matrix());
  return OnbPoint(e.vectors.leftCols(p.p()));
}

Vector principal_cosines(const Matrix& u, const Matrix& v) {
  return svd_thin(u.transpose() * v).sigma;
}

Vector principal_angles(const Matrix& u, const Matrix& v) {
  return principal_cosines(u, v).unaryExpr([](double c) { return std::acos(std::min(1.0, c)); });
}

double geodesic_distance(const Matrix& u, const Matrix& v) { return principal_angles(u, v).norm(); }

void check_cut_locus(const Matrix& utv) {
  const double smin = svd_thin(utv).sigma.minCoeff();
  if (smin < 1e-6) {
    throw CutLocusError("Grassmann log: principal angle within 1e-6 of pi/2 (cos = " +
                        std::to_string(smin) + ")");
  }
}

namespace {

void same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Matrix gr_log_onb(const OnbPoint& u, const OnbPoint& v) {
  same_shape(u, v, "gr_log_onb");
  const Matrix utv = u.matrix().transpose() * v.matrix();
  check_cut_locus(utv);
  const Matrix m = (v.matrix() - u.matrix() * utv) * utv.inverse();
  ThinSvd s = svd_thin(m);
  const Vector at = s.sigma.unaryExpr([](double x) { return std::atan(x); });
  return s.u * at.asDiagonal() * s.v.transpose();
}

GrTangent gr_log_projector(const ProjectorPoint& p, const ProjectorPoint& q) {
  same_shape(p, q, "gr_log_projector");
  if (p.p() != q.p()) throw ArgumentError("gr_log_projector: rank mismatch");
  const OnbPoint u = tau_inv(p);
  const Matrix l = gr_log_onb(u, tau_inv(q));
  return GrTangent(p, u.matrix() * l.transpose() + l * u.matrix().transpose());
}

GrTangent gr_log_projector_direct(const ProjectorPoint& p, const ProjectorPoint& q) {
  same_shape(p, q, "gr_log_projector_direct");
  const Index n = p.n();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix o = (id - 2.0 * q.matrix()) * (id - 2.0 * p.matrix());
  const Matrix omega = 0.5 * mat_log_orthogonal(o);
  return GrTangent(p, omega * p.matrix() - p.matrix() * omega);
}

ProjectorPoint gr_exp_projector(const ProjectorPoint& p, const GrTangent& delta) {
  if (delta.matrix().rows() != p.n()) throw ArgumentError("gr_exp_projector: size mismatch");
  const Matrix& pm = p.matrix();
  const Matrix& d = delta.matrix();
  if ((pm * d + d * pm - d).norm() > 1e-6 * std::max(1.0, d.norm())) {
    throw ArgumentError("gr_exp_projector: tangent condition violated");
  }
  const Matrix e = mat_exp(d * pm - pm * d);
  Matrix out = e * pm * e.transpose();
  return ProjectorPoint(0.5 * (out + out.transpose()));
}

Matrix commutator_identity(const Matrix& delta, Index p) {
  const Matrix inp = ident_np(delta.rows(), p);
  return delta * inp - inp * delta;
}

Matrix log_identity(const ProjectorPoint& p) {
  return gr_log_projector(ProjectorPoint::identity(p.n(), p.p()), p).matrix();
}

namespace {

Matrix rotation_to(const ProjectorPoint& p) { return mat_exp(commutator_identity(log_identity(p), p.p())); }

ProjectorPoint conjugate(const Matrix& e, const Matrix& x) {
  Matrix out = e * x * e.transpose();
  return ProjectorPoint(0.5 * (out + out.transpose()));
}

}  // namespace

ProjectorPoint gr_add(const ProjectorPoint& p, const ProjectorPoint& q) {
  same_shape(p, q, "gr_add");
  if (p.p() != q.p()) throw ArgumentError("gr_add: rank mismatch");
  return conjugate(rotation_to(p), q);
}

ProjectorPoint gr_inv(const ProjectorPoint& p) {
  const ProjectorPoint id = ProjectorPoint::identity(p.n(), p.p());
  return gr_exp_projector(id, GrTangent(id, -log_identity(p)));
}

OnbPoint gr_add_onb(const OnbPoint& u, const OnbPoint& v) {
  same_shape(u, v, "gr_add_onb");
  return OnbPoint(rotation_to(tau(u)) * v.matrix());
}

OnbPoint gr_inv_onb(const OnbPoint& u) { return tau_inv(gr_inv(tau(u))); }

double gr_inner(const ProjectorPoint& p, const ProjectorPoint& q) {
  same_shape(p, q, "gr_inner");
  return 0.5 * (log_identity(p) * log_identity(q)).trace();
}

ProjectorPoint gr_gyrotranslate(const ProjectorPoint& m, const ProjectorPoint& x) {
  return gr_add(m, x);
}

ProjectorPoint gr_nonlinearity(const ProjectorPoint& x) {
  const Matrix y = rotation_to(x) * tilde_np(x.n(), x.p());
  const Matrix v = qr_thin(y).q;
  return ProjectorPoint(v * v.transpose());
}

OnbPoint gr_nonlinearity_onb(const OnbPoint& u) { return OnbPoint(qr_thin(u.matrix()).q); }

Matrix skew_embed(const Matrix& b) {
  const Index p = b.rows();
  const Index n = p + b.cols();
  Matrix k = Matrix::Zero(n, n);
  k.topRightCorner(p, n - p) = b;
  k.bottomLeftCorner(n - p, p) = -b.transpose();
  return k;
}

ProjectorPoint skew_param(const Matrix& b) {
  const Index p = b.rows();
  const Index n = p + b.cols();
  return conjugate(mat_exp(skew_embed(b)), ident_np(n, p));
}

OnbPoint skew_param_onb(const Matrix& b) {
  const Index p = b.rows();
  const Index n = p + b.cols();
  return OnbPoint(mat_exp(skew_embed(b)) * tilde_np(n, p));
}

namespace var {

Var tau(Var u) { return u * ad::transpose(u); }

Var tau_inv(Var p, Index rank) {
  ad::EigVars e = ad::sym_eig(p);
  const Vector& lam = e.values.value().col(0);
  for (Index i = 0; i < lam.size(); ++i) {
    if ((i < rank) != (lam(i) > 0.5)) {
      throw TypeError("tau_inv: projector rank differs from " + std::to_string(rank));
    }
  }
  return ad::block(e.vectors, 0, 0, p.rows(), rank);
}

Var log_onb(Var u, Var v) {
  Var utv = ad::transpose(u) * v;
  check_cut_locus(utv.value());
  Var m = (v - u * utv) * ad::inverse(utv);
  return m * ad::spd_fn(ad::transpose(m) * m, ad::fn::atan_ratio);
}

Var log_identity_onb(Var u) {
  const Index n = u.rows(), p = u.cols();
  Var l = log_onb(ad::constant_like(u, tilde_np(n, p)), u);
  // Horizontal at I~: only the lower block of L is nonzero.
  Var c = ad::block(l, p, 0, n - p, p);
  Var z = ad::constant_like(u, Matrix::Zero(p, p));
  Var zc = ad::constant_like(u, Matrix::Zero(n - p, n - p));
  std::vector<Var> top{z, ad::transpose(c)};
  std::vector<Var> bottom{c, zc};
  std::vector<Var> rows{ad::hcat(top), ad::hcat(bottom)};
  return ad::vcat(rows);
}

Var log_identity(Var p, Index rank) { return log_identity_onb(tau_inv(p, rank)); }

Var commutator_identity(Var delta, Index rank) {
  Var inp = ad::constant_like(delta, ident_np(delta.rows(), rank));
  return delta * inp - inp * delta;
}

Var exp_identity(Var delta, Index rank) {
  Var e = ad::mat_exp(commutator_identity(delta, rank));
  Var inp = ad::constant_like(delta, ident_np(delta.rows(), rank));
  return ad::sym(e * inp * ad::transpose(e));
}

Var add(Var p, Var q, Index rank) {
  Var e = ad::mat_exp(commutator_identity(log_identity(p, rank), rank));
  return ad::sym(e * q * ad::transpose(e));
}

Var add_onb(Var u, Var v) {
  return ad::mat_exp(commutator_identity(log_identity_onb(u), u.cols())) * v;
}

Var inv(Var p, Index rank) { return exp_identity(-log_identity(p, rank), rank); }

Var inner(Var p, Var q, Index rank) {
  return 0.5 * ad::trace(log_identity(p, rank) * log_identity(q, rank));
}

Var nonlinearity(Var x, Index rank) {
  Var e = ad::mat_exp(commutator_identity(log_identity(x, rank), rank));
  Var y = e * ad::constant_like(x, tilde_np(x.rows(), rank));
  Var v = ad::qr_thin(y).q;
  return v * ad::transpose(v);
}

Var nonlinearity_onb(Var u) { return ad::qr_thin(u).q; }

Var skew_embed(Var b) {
  const Index p = b.rows();
  const Index q = b.cols();
  std::vector<Var> top{ad::constant_like(b, Matrix::Zero(p, p)), b};
  std::vector<Var> bottom{-ad::transpose(b), ad::constant_like(b, Matrix::Zero(q, q))};
  std::vector<Var> rows{ad::hcat(top), ad::hcat(bottom)};
  return ad::vcat(rows);
}

Var skew_param(Var b) {
  const Index p = b.rows();
  const Index n = p + b.cols();
  Var e = ad::mat_exp(skew_embed(b));
  return ad::sym(e * ad::constant_like(b, ident_np(n, p)) * ad::transpose(e));
}

Var skew_param_onb(Var b) {
  const Index p = b.rows();
  const Index n = p + b.cols();
  return ad::mat_exp(skew_embed(b)) * ad::constant_like(b, tilde_np(n, p));
}

}  // namespace var

}  // namespace gyromat::gr
