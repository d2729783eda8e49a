#pragma once

#include <vector>

#include "gyromat/autodiff.hpp"
#include "gyromat/grassmann.hpp"
#include "gyromat/gyro_spd.hpp"
#include "gyromat/linalg.hpp"

namespace gyromat::spsd {

// Represents X = U S U^T of rank p.
struct StructurePoint {
  gr::OnbPoint u;
  SpdMatrix s;

  StructurePoint() = default;
  StructurePoint(gr::OnbPoint u_, SpdMatrix s_);
  static StructurePoint identity(Index n, Index p);
  Index n() const { return u.n(); }
  Index p() const { return u.p(); }
};

struct SpsdConfig {
  double lambda = 1.0;
  spd::SpdMetric spd_metric{spd::Metric::LE, 0.0};
  double gamma = 0.1;
};

void validate(const SpsdConfig& cfg, Index p);

struct SpsdHyperplane {
  StructurePoint p;
  StructurePoint w;  // normal, as a point whose identity logs give the direction
};

// Throws DegenerateHyperplaneError when the normal has zero norm.
SpsdHyperplane make_hyperplane(const SpsdConfig& cfg, const StructurePoint& p,
                               const StructurePoint& w);

struct Decomposition {
  gr::OnbPoint u;
  SpdMatrix s_raw;
};

// Top-p eigenpairs of a PSD matrix. RankError when the p-th eigenvalue <= 1e-10.
Decomposition spsd_decompose(const SymMatrix& x, Index p);

// Aligns span(U_X) to the common subspace W: (U_X)^T W = Y cos(S) V^T,
// U = U_X Y V^T, S = (U)^T X U.
StructurePoint canonicalize(const SymMatrix& x, const gr::OnbPoint& ux, const gr::OnbPoint& w);

StructurePoint psd_add(const SpsdConfig& cfg, const StructurePoint& a, const StructurePoint& b);
StructurePoint psd_inv(const SpsdConfig& cfg, const StructurePoint& a);
double psd_inner(const SpsdConfig& cfg, const StructurePoint& a, const StructurePoint& b);
double psd_norm(const SpsdConfig& cfg, const StructurePoint& a);
double psd_gyrodistance(const SpsdConfig& cfg, const StructurePoint& a, const StructurePoint& b);

double psd_signed_numerator(const SpsdConfig& cfg, const StructurePoint& x,
                            const SpsdHyperplane& h);
double psd_normal_norm(const SpsdConfig& cfg, const SpsdHyperplane& h);
double psd_pseudo_gyrodistance(const SpsdConfig& cfg, const StructurePoint& x,
                               const SpsdHyperplane& h);

// Exp in the ONB perspective for a horizontal tangent T at U.
gr::OnbPoint gr_exp_onb(const gr::OnbPoint& u, const Matrix& t);
// Karcher mean: step 1, stops when the mean log norm < tol.
gr::OnbPoint gr_mean(const std::vector<gr::OnbPoint>& us, int max_iter = 100, double tol = 1e-9);
gr::OnbPoint gr_geodesic(const gr::OnbPoint& u, const gr::OnbPoint& v, double gamma);

// Running common subspace. Not safe for concurrent mutation.
class CommonSubspaceState {
 public:
  CommonSubspaceState() = default;
  CommonSubspaceState(Index n, Index p) : um_(gr::OnbPoint::identity(n, p)) {}
  explicit CommonSubspaceState(gr::OnbPoint um) : um_(std::move(um)) {}

  const gr::OnbPoint& um() const { return um_; }
  // U_m <- geodesic(U_m, mean(us), gamma).
  void update(const std::vector<gr::OnbPoint>& us, double gamma);

 private:
  gr::OnbPoint um_;
};

// Row i, column c: distance of xs[i] to classes[c].
Matrix batch_pseudo_gyrodistances(const SpsdConfig& cfg, const std::vector<SymMatrix>& xs,
                                  const std::vector<SpsdHyperplane>& classes,
                                  CommonSubspaceState& state, bool training);

namespace var {
using ad::Var;

struct StructureVars {
  Var u;
  Var s;
};

struct HyperplaneVars {
  Var up, sp, uw, sw;
};

// Top-p eigenvectors (gauge is irrelevant downstream).
Var decompose(Var x, Index p);
// Polar form of the canonical alignment against a fixed common subspace.
StructureVars canonicalize(Var x, Var ux, const Matrix& um);
Var signed_numerator(const SpsdConfig& cfg, const StructureVars& x, const HyperplaneVars& h);
Var normal_norm(const SpsdConfig& cfg, const HyperplaneVars& h);
}  // namespace var

}  // namespace gyromat::spsd
