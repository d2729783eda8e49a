#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "gyromat/autodiff.hpp"
#include "gyromat/linalg.hpp"

namespace gyromat::spd {

enum class Metric { AI, LE, LC };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

struct SpdMetric {
  Metric tag = Metric::AI;
  double beta = 0.0;  // AI only
};

// beta > -1/m for AI.
void validate(const SpdMetric& g, Index m);

// Gyro operations.
SpdMatrix spd_add(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q);
SpdMatrix spd_inv(const SpdMetric& g, const SpdMatrix& p);
double spd_inner(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q);
double spd_norm(const SpdMetric& g, const SpdMatrix& p);
SpdMatrix gyration(const SpdMetric& g, const SpdMatrix& a, const SpdMatrix& b,
                   const SpdMatrix& c);

// Euclidean coordinates of Log_I: log P for AI/LE, the Cholesky lift
// floor(L) + log D(L) for LC.
Matrix lift(const SpdMetric& g, const SpdMatrix& p);
// Same coordinates for a tangent vector at I: V for AI/LE, V_{1/2} for LC.
Matrix lift_tangent(const SpdMetric& g, const Matrix& v);

// Riemannian maps. LE tangents live in log coordinates.
SymMatrix log_map(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q);
SpdMatrix exp_map(const SpdMetric& g, const SpdMatrix& p, const SymMatrix& v);
SymMatrix transport(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& q,
                    const SymMatrix& v);
double metric_at(const SpdMetric& g, const SpdMatrix& p, const SymMatrix& v, const SymMatrix& w);

// Orthonormal basis E_(i,j), i <= j, in row-major pair order.
std::vector<std::pair<Index, Index>> upper_pairs(Index m);
std::vector<SpdMatrix> spd_basis(const SpdMetric& g, Index m);

struct SpdHyperplane {
  SpdMatrix p;
  SymMatrix a;  // normal as a tangent vector at I
};

SpdHyperplane hyperplane_from_point(const SpdMetric& g, const SpdMatrix& p, const SpdMatrix& w);
SpdHyperplane hyperplane_from_tangent(const SpdMetric& g, const SpdMatrix& p,
                                      const SymMatrix& w_at_p);

// <lift(-P (+) X), lift_tangent(A)>_F.
double signed_numerator(const SpdMetric& g, const SpdMatrix& x, const SpdHyperplane& h);
double signed_pseudo_gyrodistance(const SpdMetric& g, const SpdMatrix& x,
                                  const SpdHyperplane& h);
double pseudo_gyrodistance(const SpdMetric& g, const SpdMatrix& x, const SpdHyperplane& h);

// Closed forms written against a tangent W at P, as stated for AI and LC.
double pseudo_gyrodistance_ai_closed(const SpdMatrix& x, const SpdMatrix& p, const SymMatrix& w);
double pseudo_gyrodistance_lc_closed(const SpdMatrix& x, const SpdMatrix& p, const SymMatrix& w);

Vector spd_mlr_logits(const SpdMetric& g, const SpdMatrix& x,
                      const std::vector<SpdHyperplane>& classes);

struct FcParams {
  std::vector<SpdMatrix> p;  // one per upper pair of the output size
  std::vector<SpdMatrix> w;
};

FcParams fc_identity_params(const SpdMetric& g, Index m);
double fc_unit_value(const SpdMetric& g, const SpdMatrix& x, const SpdMatrix& p,
                     const SpdMatrix& w);
SpdMatrix fc_assemble(const SpdMetric& g, Index m, const Vector& v);
SpdMatrix spd_fc_forward(const SpdMetric& g, const SpdMatrix& x, const FcParams& params, Index m);

// params.p entries are per-window blocks concatenated: size L*n, block diagonal.
std::vector<SpdMatrix> spd_conv_forward(const SpdMetric& g, const std::vector<SpdMatrix>& seq,
                                        Index window, Index stride, Index m,
                                        const FcParams& params);
Index conv_output_count(Index len, Index window, Index stride);

// Differentiable counterparts used by the layers.
namespace var {
using ad::Var;
Var lift(const SpdMetric& g, Var p);
Var spd_add(const SpdMetric& g, Var p, Var q);
Var spd_inv(const SpdMetric& g, Var p);
Var spd_inner(const SpdMetric& g, Var p, Var q);
// Output of the FC layer from the unit values (1x1 each, upper_pairs order).
Var fc_assemble(const SpdMetric& g, Index m, std::span<const Var> v);
}  // namespace var

}  // namespace gyromat::spd
