#pragma once

#include "gyromat/autodiff.hpp"
#include "gyromat/linalg.hpp"

namespace gyromat::gr {

// n x p with orthonormal columns.
class OnbPoint {
 public:
  OnbPoint() = default;
  explicit OnbPoint(const Matrix& u);
  static OnbPoint identity(Index n, Index p);

  const Matrix& matrix() const { return u_; }
  Index n() const { return u_.rows(); }
  Index p() const { return u_.cols(); }
  operator const Matrix&() const { return u_; }

 private:
  Matrix u_;
};

// Rank-p orthogonal projector.
class ProjectorPoint {
 public:
  ProjectorPoint() = default;
  explicit ProjectorPoint(const Matrix& p);
  static ProjectorPoint identity(Index n, Index p);

  const Matrix& matrix() const { return m_; }
  Index n() const { return m_.rows(); }
  Index p() const { return rank_; }
  operator const Matrix&() const { return m_; }

 private:
  Matrix m_;
  Index rank_ = 0;
};

// Tangent vector at a projector P: symmetric, P D + D P = D.
class GrTangent {
 public:
  GrTangent() = default;
  GrTangent(const ProjectorPoint& base, const Matrix& delta);

  const Matrix& matrix() const { return d_; }
  operator const Matrix&() const { return d_; }

 private:
  Matrix d_;
};

// I_{n,p} = diag(I_p, 0) and I~_{n,p} = first p columns of I_n.
Matrix ident_np(Index n, Index p);
Matrix tilde_np(Index n, Index p);

ProjectorPoint tau(const OnbPoint& u);
OnbPoint tau_inv(const ProjectorPoint& p);

// Cosines of the principal angles (singular values of U^T V), descending.
Vector principal_cosines(const Matrix& u, const Matrix& v);
Vector principal_angles(const Matrix& u, const Matrix& v);
double geodesic_distance(const Matrix& u, const Matrix& v);

// Throws CutLocusError when the smallest singular value of U^T V is < 1e-6.
void check_cut_locus(const Matrix& utv);

Matrix gr_log_onb(const OnbPoint& u, const OnbPoint& v);
GrTangent gr_log_projector(const ProjectorPoint& p, const ProjectorPoint& q);
// [Omega, P] with Omega = 1/2 log((I-2Q)(I-2P)); not differentiated.
GrTangent gr_log_projector_direct(const ProjectorPoint& p, const ProjectorPoint& q);
ProjectorPoint gr_exp_projector(const ProjectorPoint& p, const GrTangent& delta);

// [D, I_{n,p}] and its exponential.
Matrix commutator_identity(const Matrix& delta, Index p);
Matrix log_identity(const ProjectorPoint& p);

ProjectorPoint gr_add(const ProjectorPoint& p, const ProjectorPoint& q);
ProjectorPoint gr_inv(const ProjectorPoint& p);
OnbPoint gr_add_onb(const OnbPoint& u, const OnbPoint& v);
OnbPoint gr_inv_onb(const OnbPoint& u);
double gr_inner(const ProjectorPoint& p, const ProjectorPoint& q);
ProjectorPoint gr_gyrotranslate(const ProjectorPoint& m, const ProjectorPoint& x);
ProjectorPoint gr_nonlinearity(const ProjectorPoint& x);
OnbPoint gr_nonlinearity_onb(const OnbPoint& u);

// B is p x (n-p); K_B = [[0, B], [-B^T, 0]].
Matrix skew_embed(const Matrix& b);
ProjectorPoint skew_param(const Matrix& b);
OnbPoint skew_param_onb(const Matrix& b);

namespace var {
using ad::Var;
Var tau(Var u);
Var tau_inv(Var p, Index rank);
// M h(M^T M), h(x) = arctan(sqrt x)/sqrt x, M = (V - U U^T V)(U^T V)^{-1}.
Var log_onb(Var u, Var v);
// Log at I_{n,p} of a projector (through tau_inv) or of an ONB point.
Var log_identity(Var p, Index rank);
Var log_identity_onb(Var u);
Var commutator_identity(Var delta, Index rank);
Var exp_identity(Var delta, Index rank);
Var add(Var p, Var q, Index rank);
Var add_onb(Var u, Var v);
Var inv(Var p, Index rank);
Var inner(Var p, Var q, Index rank);
Var nonlinearity(Var x, Index rank);
Var nonlinearity_onb(Var u);
Var skew_embed(Var b);
Var skew_param(Var b);
Var skew_param_onb(Var b);
}  // namespace var

}  // namespace gyromat::gr
