#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gyromat/grassmann.hpp"
#include "test_util.hpp"

using namespace gyromat;
using namespace gyromat::gr;
using testutil::gaussian;
using testutil::random_onb;
using testutil::random_orthogonal;
using testutil::rel;

namespace {

Matrix unit2(double th) {
  Matrix u(2, 1);
  u << std::cos(th), std::sin(th);
  return u;
}

ProjectorPoint proj_of(const Matrix& u) { return ProjectorPoint(u * u.transpose()); }

// ONB near I~ so principal angles stay well below pi/2.
Matrix near_identity_onb(std::mt19937_64& rng, Index n, Index p, double s) {
  Matrix b = gaussian(rng, p, n - p, s);
  return skew_param_onb(b).matrix();
}

double dist(const ProjectorPoint& a, const ProjectorPoint& b) {
  return geodesic_distance(tau_inv(a).matrix(), tau_inv(b).matrix());
}

}  // namespace

TEST(GrTypes, Invariants) {
  EXPECT_THROW(OnbPoint(Matrix::Ones(3, 2)), TypeError);
  EXPECT_THROW(ProjectorPoint(0.5 * Matrix::Identity(2, 2)), TypeError);
  EXPECT_THROW(ProjectorPoint(Matrix::Zero(3, 3)), TypeError);
  ProjectorPoint i = ProjectorPoint::identity(4, 2);
  EXPECT_EQ(i.p(), 2);
  EXPECT_THROW(GrTangent(i, Matrix::Identity(4, 4)), ArgumentError);
}

TEST(GrTau, Examples) {
  EXPECT_EQ(tau(OnbPoint::identity(5, 2)).matrix(), ident_np(5, 2));
  OnbPoint u = tau_inv(ProjectorPoint::identity(5, 2));
  EXPECT_LT((u.matrix() * u.matrix().transpose() - ident_np(5, 2)).norm(), 1e-14);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    ProjectorPoint p = tau(OnbPoint(random_onb(rng, 7, 3)));
    EXPECT_LT(rel(tau(tau_inv(p)).matrix(), p.matrix()), 1e-9);
  }
}

TEST(GrLog, OnbExamples) {
  std::mt19937_64 rng(12);
  OnbPoint u(random_onb(rng, 6, 2));
  EXPECT_LT(gr_log_onb(u, u).norm(), 1e-12);
  const double th = 0.7;
  Matrix l = gr_log_onb(OnbPoint(unit2(0)), OnbPoint(unit2(th)));
  EXPECT_NEAR(l(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(l(1, 0), th, 1e-14);
  for (int t = 0; t < 20; ++t) {
    OnbPoint a(random_onb(rng, 8, 3)), b(random_onb(rng, 8, 3));
    Matrix lab = gr_log_onb(a, b);
    EXPECT_LT((a.matrix().transpose() * lab).norm(), 1e-9);
    // Independent oracle: principal angles from arccos of the cosines.
    Eigen::JacobiSVD<Matrix> svd(a.matrix().transpose() * b.matrix());
    double s2 = 0;
    for (Index i = 0; i < svd.singularValues().size(); ++i) {
      const double ang = std::acos(std::min(1.0, svd.singularValues()(i)));
      s2 += ang * ang;
    }
    EXPECT_NEAR(lab.squaredNorm(), s2, 1e-8);
  }
}

TEST(GrLog, CutLocus) {
  Matrix v(2, 1);
  v << 0.0, 1.0;
  EXPECT_THROW(gr_log_onb(OnbPoint(unit2(0)), OnbPoint(v)), CutLocusError);
  EXPECT_THROW(gr_log_projector(proj_of(unit2(0)), proj_of(v)), CutLocusError);
}

TEST(GrLog, ProjectorExamples) {
  const double th = 0.4;
  Matrix expect(2, 2);
  expect << 0, th, th, 0;
  ProjectorPoint p = proj_of(unit2(0)), q = proj_of(unit2(th));
  EXPECT_LT(gr_log_projector(p, p).matrix().norm(), 1e-12);
  EXPECT_LT(gr_log_projector_direct(p, p).matrix().norm(), 1e-12);
  EXPECT_LT(rel(gr_log_projector(p, q).matrix(), expect), 1e-12);
  EXPECT_LT(rel(gr_log_projector_direct(p, q).matrix(), expect), 1e-12);
  EXPECT_LT(rel(gr_exp_projector(p, GrTangent(p, expect)).matrix(), q.matrix()), 1e-12);
}

TEST(GrLog, PerspectiveConsistency) {
  std::mt19937_64 rng(13);
  int tested = 0;
  while (tested < 20) {
    Matrix u = random_onb(rng, 6, 2), v = random_onb(rng, 6, 2);
    if (principal_angles(u, v).maxCoeff() > std::numbers::pi / 2 - 0.1) continue;
    ++tested;
    ProjectorPoint p = proj_of(u), q = proj_of(v);
    GrTangent l = gr_log_projector(p, q);
    EXPECT_LT(rel(l.matrix(), gr_log_projector_direct(p, q).matrix()), 1e-6);
    EXPECT_LT(rel(gr_exp_projector(p, l).matrix(), q.matrix()), 1e-8);
    EXPECT_LT(rel(gr_exp_projector(p, gr_log_projector_direct(p, q)).matrix(), q.matrix()), 1e-8);
  }
}

TEST(GrLog, GaugeInvariance) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 10; ++t) {
    Matrix u = near_identity_onb(rng, 7, 3, 0.3);
    Matrix v = near_identity_onb(rng, 7, 3, 0.3);
    Matrix r = random_orthogonal(rng, 3), r2 = random_orthogonal(rng, 3);
    Matrix l1 = gr_log_onb(OnbPoint(u), OnbPoint(v));
    Matrix l2 = gr_log_onb(OnbPoint(u * r), OnbPoint(v * r2));
    Matrix d1 = u * l1.transpose() + l1 * u.transpose();
    Matrix d2 = u * r * l2.transpose() + l2 * (u * r).transpose();
    EXPECT_LT((d1 - d2).norm(), 1e-9);
  }
}

TEST(GrExp, Examples) {
  std::mt19937_64 rng(15);
  ProjectorPoint p = tau(OnbPoint(random_onb(rng, 8, 3)));
  EXPECT_LT(rel(gr_exp_projector(p, GrTangent(p, Matrix::Zero(8, 8))).matrix(), p.matrix()),
            1e-14);
  for (int t = 0; t < 20; ++t) {
    ProjectorPoint a = tau(OnbPoint(near_identity_onb(rng, 8, 3, 0.4)));
    ProjectorPoint b = tau(OnbPoint(near_identity_onb(rng, 8, 3, 0.4)));
    EXPECT_LT(rel(gr_exp_projector(a, gr_log_projector(a, b)).matrix(), b.matrix()), 1e-8);
  }
  Matrix bad = Matrix::Identity(8, 8);
  EXPECT_THROW(gr_exp_projector(p, GrTangent(ProjectorPoint::identity(8, 8), bad)),
               ArgumentError);
}

TEST(GrGyro, ProjectorGroupLaws) {
  std::mt19937_64 rng(16);
  const ProjectorPoint id = ProjectorPoint::identity(6, 2);
  EXPECT_LT(rel(gr_inv(id).matrix(), id.matrix()), 1e-14);
  for (int t = 0; t < 20; ++t) {
    ProjectorPoint p = tau(OnbPoint(near_identity_onb(rng, 6, 2, 0.4)));
    ProjectorPoint q = tau(OnbPoint(near_identity_onb(rng, 6, 2, 0.4)));
    EXPECT_LT(rel(gr_add(id, q).matrix(), q.matrix()), 1e-10);
    EXPECT_LT(rel(gr_add(gr_inv(p), p).matrix(), id.matrix()), 1e-8);
    EXPECT_LT(rel(gr_add(gr_inv(p), gr_add(p, q)).matrix(), q.matrix()), 1e-8);
  }
}

TEST(GrGyro, OnbPerspective) {
  std::mt19937_64 rng(17);
  const OnbPoint id = OnbPoint::identity(7, 3);
  for (int t = 0; t < 20; ++t) {
    OnbPoint u(near_identity_onb(rng, 7, 3, 0.4)), v(near_identity_onb(rng, 7, 3, 0.4));
    EXPECT_LT(rel(gr_add_onb(id, v).matrix(), v.matrix()), 1e-10);
    EXPECT_LT(rel(tau(gr_add_onb(u, v)).matrix(), gr_add(tau(u), tau(v)).matrix()), 1e-8);
    OnbPoint w = gr_add_onb(gr_inv_onb(u), u);
    EXPECT_LT(principal_angles(w.matrix(), id.matrix()).maxCoeff(), 1e-7);
  }
}

TEST(GrGyro, Inner) {
  std::mt19937_64 rng(18);
  const double th = 0.9;
  ProjectorPoint id = ProjectorPoint::identity(2, 1), p = proj_of(unit2(th));
  EXPECT_NEAR(gr_inner(id, p), 0.0, 1e-15);
  EXPECT_NEAR(gr_inner(p, p), th * th, 1e-12);
  for (int t = 0; t < 10; ++t) {
    ProjectorPoint a = tau(OnbPoint(near_identity_onb(rng, 6, 2, 0.5)));
    ProjectorPoint b = tau(OnbPoint(near_identity_onb(rng, 6, 2, 0.5)));
    EXPECT_NEAR(gr_inner(a, b), gr_inner(b, a), 1e-14);
  }
}

TEST(GrGyro, GyrotranslationIsometry) {
  std::mt19937_64 rng(19);
  const ProjectorPoint id = ProjectorPoint::identity(7, 3);
  for (int t = 0; t < 10; ++t) {
    ProjectorPoint m = tau(OnbPoint(near_identity_onb(rng, 7, 3, 0.5)));
    ProjectorPoint x = tau(OnbPoint(random_onb(rng, 7, 3)));
    ProjectorPoint y = tau(OnbPoint(random_onb(rng, 7, 3)));
    EXPECT_LT(rel(gr_gyrotranslate(id, x).matrix(), x.matrix()), 1e-12);
    ProjectorPoint mx = gr_gyrotranslate(m, x), my = gr_gyrotranslate(m, y);
    EXPECT_NEAR(mx.matrix().trace(), 3.0, 1e-12);
    EXPECT_NEAR(dist(mx, my), dist(x, y), 1e-8);
  }
}

TEST(GrNonlinearity, Examples) {
  std::mt19937_64 rng(20);
  const ProjectorPoint id = ProjectorPoint::identity(6, 2);
  EXPECT_LT(rel(gr_nonlinearity(id).matrix(), id.matrix()), 1e-12);
  for (int t = 0; t < 10; ++t) {
    ProjectorPoint x = tau(OnbPoint(near_identity_onb(rng, 6, 2, 0.5)));
    ProjectorPoint y = gr_nonlinearity(x);
    EXPECT_LT((y.matrix() * y.matrix() - y.matrix()).norm(), 1e-9);
    EXPECT_NEAR(y.matrix().trace(), 2.0, 1e-9);
    // ONB input matched to the same rotated frame.
    Matrix frame = mat_exp(commutator_identity(log_identity(x), 2)) * tilde_np(6, 2);
    EXPECT_LT(rel(tau(gr_nonlinearity_onb(OnbPoint(frame))).matrix(), y.matrix()), 1e-10);
  }
}

TEST(GrSkew, Examples) {
  EXPECT_LT(rel(skew_param(Matrix::Zero(2, 3)).matrix(), ident_np(5, 2)), 1e-15);
  const double th = 0.6;
  Matrix b(1, 1);
  b << th;
  EXPECT_LT(rel(skew_param(b).matrix(), proj_of(unit2(-th)).matrix()), 1e-13);
  EXPECT_LT(rel(skew_param_onb(b).matrix(), unit2(-th)), 1e-13);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    Matrix bb = gaussian(rng, 2, 4, 0.3);
    Matrix k = commutator_identity(log_identity(skew_param(bb)), 2);
    EXPECT_LT(rel(k, skew_embed(bb)), 1e-9);
  }
}

TEST(GrVar, AgreesWithPlain) {
  std::mt19937_64 rng(22);
  ad::Tape tape(false);
  for (int t = 0; t < 10; ++t) {
    OnbPoint u(random_onb(rng, 7, 3)), v(random_onb(rng, 7, 3));
    if (principal_angles(u, v).maxCoeff() > 1.4) continue;
    ad::Var vu = tape.leaf(u.matrix()), vv = tape.leaf(v.matrix());
    EXPECT_LT(rel(var::log_onb(vu, vv).value(), gr_log_onb(u, v)), 1e-10);
    ProjectorPoint p = tau(u), q = tau(v);
    ad::Var vp = tape.leaf(p.matrix()), vq = tape.leaf(q.matrix());
    EXPECT_LT(rel(var::log_identity(vq, 3).value(), log_identity(q)), 1e-9);
    EXPECT_LT(rel(var::log_identity_onb(vv).value(), log_identity(q)), 1e-9);
    EXPECT_LT(rel(var::add(vp, vq, 3).value(), gr_add(p, q).matrix()), 1e-9);
    EXPECT_LT(rel(var::inv(vp, 3).value(), gr_inv(p).matrix()), 1e-9);
    EXPECT_LT(std::abs(var::inner(vp, vq, 3).scalar() - gr_inner(p, q)), 1e-9);
    EXPECT_LT(rel(var::nonlinearity(vq, 3).value(), gr_nonlinearity(q).matrix()), 1e-9);
    EXPECT_LT(rel(tau(OnbPoint(var::add_onb(vu, vv).value())).matrix(), gr_add(p, q).matrix()),
              1e-9);
  }
  Matrix b = gaussian(rng, 2, 3, 0.5);
  ad::Var vb = tape.leaf(b);
  EXPECT_LT(rel(var::skew_param(vb).value(), skew_param(b).matrix()), 1e-12);
  EXPECT_LT(rel(var::skew_param_onb(vb).value(), skew_param_onb(b).matrix()), 1e-12);
}

TEST(GrVar, Gradchecks) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 5; ++t) {
    Matrix u = near_identity_onb(rng, 6, 2, 0.4), v = near_identity_onb(rng, 6, 2, 0.4);
    auto onb_log = [](ad::Tape&, std::span<const ad::Var> x) {
      return ad::sum(var::log_onb(x[0], x[1]));
    };
    EXPECT_LT(ad::gradcheck(onb_log, {u, v}).max_rel_err, 1e-4);
    Matrix w = gaussian(rng, 6, 6);
    auto nl = [&w](ad::Tape&, std::span<const ad::Var> x) {
      ad::Var y = var::nonlinearity(var::skew_param(x[0]), 2);
      return ad::dot(y, ad::constant_like(y, w));
    };
    EXPECT_LT(ad::gradcheck(nl, {gaussian(rng, 2, 4, 0.3)}).max_rel_err, 1e-4);
    auto onb_add = [&w](ad::Tape&, std::span<const ad::Var> x) {
      ad::Var y = var::add_onb(var::skew_param_onb(x[0]), var::skew_param_onb(x[1]));
      return ad::dot(y, ad::constant_like(y, w.leftCols(2)));
    };
    EXPECT_LT(ad::gradcheck(onb_add, {gaussian(rng, 2, 4, 0.3), gaussian(rng, 2, 4, 0.3)})
                  .max_rel_err,
              1e-4);
  }
}
