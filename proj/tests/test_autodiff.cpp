#include <gtest/gtest.h>

#include "gyromat/autodiff.hpp"
#include "test_util.hpp"

using namespace gyromat;
using namespace testutil;
namespace ad = gyromat::ad;
using ad::Tape;
using ad::Var;

namespace {

// Fixed random probe so the loss touches every output entry.
ad::LeafFunction probe(std::function<Var(Var)> op, const Matrix& weights) {
  return [op, weights](Tape& t, std::span<const Var> x) {
    Var y = op(x[0]);
    return ad::dot(ad::constant(t, weights), y);
  };
}

double check_unary(std::function<Var(Var)> op, const Matrix& x, std::mt19937_64& rng) {
  Tape t(false);
  Var y = op(t.leaf(x));
  Matrix w = gaussian(rng, y.rows(), y.cols());
  return ad::gradcheck(probe(op, w), {x}).max_rel_err;
}

Var sym_in(Var x) { return ad::sym(x); }

}  // namespace

TEST(Autodiff, TraceGradient) {
  Tape t;
  Var x = t.leaf(Matrix::Random(3, 3));
  Var l = ad::trace(x);
  t.backward(l);
  EXPECT_EQ((t.grad(x) - Matrix::Identity(3, 3)).norm(), 0);
}

TEST(Autodiff, FrobeniusSquareGradient) {
  Matrix x0 = Matrix::Random(3, 2);
  Tape t;
  Var x = t.leaf(x0);
  t.backward(ad::dot(x, x));
  EXPECT_LT((t.grad(x) - 2 * x0).norm(), 1e-15);
}

TEST(Autodiff, TraceLogGradient) {
  Tape t;
  Var p = t.leaf(diagm({2, 3}));
  t.backward(ad::trace(ad::spd_fn(p, MatFn::Log)));
  Matrix expect = diagm({0.5, 1.0 / 3});
  EXPECT_LT((t.grad(p) - expect).norm(), 1e-14);
}

TEST(Autodiff, UnreachableLeafZero) {
  Tape t;
  Var a = t.leaf(Matrix::Ones(2, 2));
  Var b = t.leaf(Matrix::Ones(2, 2));
  t.backward(ad::sum(a));
  EXPECT_EQ(t.grad(b).norm(), 0);
  EXPECT_EQ(t.grad(b).rows(), 2);
}

TEST(Autodiff, EachNodeVisitedOnce) {
  // Diamond: x -> (y = 2x, z = 3x) -> y + z; gradient must be exactly 5.
  Tape t;
  Var x = t.leaf(Matrix::Constant(1, 1, 1.0));
  Var y = 2.0 * x;
  Var z = 3.0 * x;
  t.backward(y + z);
  EXPECT_EQ(t.grad(x)(0, 0), 5.0);
}

TEST(Autodiff, ParentsPrecedeChildren) {
  Tape t;
  Var x = t.leaf(Matrix::Random(2, 2));
  Var y = ad::mat_exp(x * x);
  EXPECT_FALSE(t.parents(y).empty());
  for (std::size_t p : t.parents(y)) EXPECT_LT(p, y.id());
}

TEST(Autodiff, OracleOpRejected) {
  Tape t(true);
  Var x = t.leaf(Matrix::Identity(3, 3));
  EXPECT_THROW(ad::mat_log_orthogonal(x), UnsupportedOpError);
  Tape plain(false);
  Var y = plain.leaf(Matrix::Identity(3, 3));
  EXPECT_LT(ad::mat_log_orthogonal(y).value().norm(), 1e-15);
}

TEST(Autodiff, NonFiniteForwardRejected) {
  Tape t;
  Var x = t.leaf(Matrix::Constant(1, 1, 1000.0));
  EXPECT_THROW(ad::cwise(x, ad::fn::exp), NumericalError);
}

TEST(Autodiff, SymmetricGradientForSymmetrisedInput) {
  std::mt19937_64 rng(1);
  Tape t;
  Var x = t.leaf(gaussian(rng, 4, 4));
  Var s = ad::spd_fn(ad::sym(x), MatFn::Exp);
  t.backward(ad::dot(ad::constant(t, gaussian(rng, 4, 4)), s));
  Matrix g = t.grad(x);
  EXPECT_LT((g - g.transpose()).norm(), 1e-12);
}

TEST(Gradcheck, TraceSquare) {
  std::mt19937_64 rng(2);
  auto f = [](Tape&, std::span<const Var> x) { return ad::trace(x[0] * x[0]); };
  EXPECT_LT(ad::gradcheck(f, {gaussian(rng, 4, 4)}).max_rel_err, 1e-7);
}

TEST(Gradcheck, LogNormSquared) {
  std::mt19937_64 rng(3);
  auto f = [](Tape&, std::span<const Var> x) {
    Var l = ad::spd_fn(ad::sym(x[0]), MatFn::Log);
    return ad::dot(l, l);
  };
  EXPECT_LT(ad::gradcheck(f, {random_spd(rng, 4)}).max_rel_err, 1e-5);
}

TEST(Gradcheck, NonFinitePerturbationIsEvaluationError) {
  auto f = [](Tape&, std::span<const Var> x) { return ad::trace(ad::cwise(x[0], ad::fn::log)); };
  EXPECT_THROW(ad::gradcheck(f, {Matrix::Constant(1, 1, 1e-7)}), Error);
}

TEST(Gradcheck, ElementaryPrimitives) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = gaussian(rng, 3, 4);
    Matrix b = gaussian(rng, 4, 3);
    Matrix sq = gaussian(rng, 4, 4);
    EXPECT_LT(check_unary([&](Var x) { return x * ad::constant(*x.tape(), b); }, a, rng), 1e-5);
    EXPECT_LT(check_unary([&](Var x) { return ad::constant(*x.tape(), b) * x; }, a, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return x + x * 2.0 - (-x); }, a, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::transpose(x); }, a, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::trace(x * x); }, sq, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::dot(x, x); }, a, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::hadamard(x, x); }, a, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::lower_strict(x) + ad::diag_part(x * x); }, sq,
                          rng),
              1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::half_lower(x); }, sq, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::inverse(ad::add_identity(x, 4.0)); }, sq, rng),
              1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::block(x, 1, 1, 2, 2); }, sq, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::reshape(x, 2, 6); }, a, rng), 1e-5);
    EXPECT_LT(check_unary(
                  [](Var x) {
                    std::vector<Var> parts{x, ad::transpose(x)};
                    return ad::block_diag(parts);
                  },
                  a, rng),
              1e-5);
    EXPECT_LT(check_unary(
                  [](Var x) {
                    std::vector<Var> parts{x, x * 3.0};
                    return ad::hcat(parts) * ad::transpose(ad::hcat(parts));
                  },
                  a, rng),
              1e-5);
    EXPECT_LT(check_unary(
                  [](Var x) {
                    std::vector<Var> parts{x, x};
                    return ad::vcat(parts);
                  },
                  a, rng),
              1e-5);
    EXPECT_LT(check_unary(
                  [](Var x) {
                    std::vector<Var> s{ad::block(x, 0, 0, 1, 1), ad::block(x, 1, 2, 1, 1)};
                    std::vector<Matrix> m{Matrix::Identity(2, 2), Matrix::Ones(2, 2)};
                    return ad::linear_combination(s, m);
                  },
                  a, rng),
              1e-5);
    EXPECT_LT(check_unary(
                  [](Var x) { return ad::scale(ad::block(x, 0, 0, 1, 1), x); }, a, rng),
              1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::diag_map(x, ad::fn::exp); }, sq, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::cwise(x, ad::fn::exp); }, a, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::mat_exp(x); }, sq, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::mat_exp(4.0 * x); }, sq, rng), 1e-5);
  }
}

TEST(Gradcheck, FactorisationPrimitives) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix spd = random_spd(rng, 4);
    EXPECT_LT(check_unary([](Var x) { return ad::spd_fn(sym_in(x), MatFn::Log); }, spd, rng),
              1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::spd_fn(sym_in(x), MatFn::Exp); }, spd, rng),
              1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::spd_fn(sym_in(x), MatFn::Sqrt); }, spd, rng),
              1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::spd_fn(sym_in(x), MatFn::InvSqrt); }, spd, rng),
              1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::spd_fn(sym_in(x), ad::fn::atan_ratio); }, spd,
                          rng),
              1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::cholesky(sym_in(x)); }, spd, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::sym_eig(sym_in(x)).values; }, spd, rng), 1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::sym_eig(sym_in(x)).vectors; }, spd, rng), 1e-4);

    Matrix tall = gaussian(rng, 5, 3);
    EXPECT_LT(check_unary([](Var x) { return ad::qr_thin(x).q; }, tall, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::qr_thin(x).r; }, tall, rng), 1e-5);
    EXPECT_LT(check_unary([](Var x) { return ad::svd_thin(x).sigma; }, tall, rng), 1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::svd_thin(x).u; }, tall, rng), 1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::svd_thin(x).v; }, tall, rng), 1e-4);
    Matrix wide = gaussian(rng, 3, 5);
    EXPECT_LT(check_unary([](Var x) { return ad::svd_thin(x).u; }, wide, rng), 1e-4);
    EXPECT_LT(check_unary([](Var x) { return ad::svd_thin(x).v; }, wide, rng), 1e-4);
  }
}

TEST(Gradcheck, SpdFnRepeatedEigenvalues) {
  std::mt19937_64 rng(6);
  Matrix q = random_orthogonal(rng, 4);
  Matrix p = q * diagm({2, 2, 1, 1}) * q.transpose();
  p = 0.5 * (p + p.transpose());
  EXPECT_LT(check_unary([](Var x) { return ad::spd_fn(sym_in(x), MatFn::Log); }, p, rng), 1e-4);
}

TEST(Gradcheck, SvdConditioningError) {
  Tape t;
  Var x = t.leaf(Matrix::Identity(3, 2));
  ad::SvdVars s = ad::svd_thin(x);
  EXPECT_THROW(t.backward(ad::sum(s.u)), ConditioningError);
}

TEST(CrossEntropy, Values) {
  Tape t(false);
  Var z = t.leaf(Matrix::Zero(4, 1));
  EXPECT_NEAR(ad::cross_entropy(z, 2).scalar(), std::log(4.0), 1e-15);
  Matrix big = Matrix::Zero(3, 1);
  big(1, 0) = 100;
  EXPECT_LT(ad::cross_entropy(t.leaf(big), 1).scalar(), 1e-40);
  EXPECT_THROW(ad::cross_entropy(z, 4), ArgumentError);
  std::mt19937_64 rng(7);
  auto f = [](Tape&, std::span<const Var> x) { return ad::cross_entropy(x[0], 1); };
  EXPECT_LT(ad::gradcheck(f, {gaussian(rng, 3, 1)}).max_rel_err, 1e-7);
}
