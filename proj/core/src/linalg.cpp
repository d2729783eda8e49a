#include "gyromat/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace gyromat {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double op_norm_sq(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  Matrix g = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

}  // namespace

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entry");
  }
}

void require_square(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw ArgumentError(std::string(what) + ": expected a square matrix, got " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

SymMatrix::SymMatrix(const Matrix& s) {
  require_square(s, "SymMatrix");
  require_finite(s, "SymMatrix");
  m_ = 0.5 * (s + s.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
SymMatrix SymMatrix::zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

SpdMatrix::SpdMatrix(const Matrix& s) : SpdMatrix(SymMatrix(s)) {}

SpdMatrix::SpdMatrix(const SymMatrix& s) : s_(s) {
  if (s.size() == 0) throw ArgumentError("SpdMatrix: empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix(), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(hi, 0.0)) || lo <= 0.0) {
    throw DomainError("SpdMatrix: smallest eigenvalue " + fmt(lo) + " is not positive", lo);
  }
}

SpdMatrix SpdMatrix::identity(Index n) { return SpdMatrix(Matrix::Identity(n, n)); }

LowerTri::LowerTri(const Matrix& l) {
  require_square(l, "LowerTri");
  require_finite(l, "LowerTri");
  for (Index j = 1; j < l.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (l(i, j) != 0.0) throw TypeError("LowerTri: nonzero entry above the diagonal");
    }
  }
  m_ = l;
}

std::string_view to_string(MatFn f) {
  switch (f) {
    case MatFn::Exp: return "exp";
    case MatFn::Log: return "log";
    case MatFn::Sqrt: return "sqrt";
    case MatFn::InvSqrt: return "invsqrt";
  }
  return "?";
}

void fix_column_signs(Matrix& q) {
  for (Index j = 0; j < q.cols(); ++j) {
    Index imax = 0;
    q.col(j).cwiseAbs().maxCoeff(&imax);
    if (q(imax, j) < 0.0) q.col(j) = -q.col(j);
  }
}

void fix_column_signs(Matrix& a, Matrix& b) {
  for (Index j = 0; j < a.cols(); ++j) {
    Index imax = 0;
    a.col(j).cwiseAbs().maxCoeff(&imax);
    if (a(imax, j) < 0.0) {
      a.col(j) = -a.col(j);
      b.col(j) = -b.col(j);
    }
  }
}

SymEig sym_eig(const Matrix& s) {
  require_square(s, "sym_eig");
  require_finite(s, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("sym_eig: eigensolver did not converge", s.norm());
  }
  SymEig out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  fix_column_signs(out.vectors);
  return out;
}

SymEig sym_eig(const SymMatrix& s) { return sym_eig(s.matrix()); }

namespace {

double apply_fn(MatFn f, double x) {
  switch (f) {
    case MatFn::Exp: return std::exp(x);
    case MatFn::Log: return std::log(x);
    case MatFn::Sqrt: return std::sqrt(x);
    case MatFn::InvSqrt: return 1.0 / std::sqrt(x);
  }
  return x;
}

}  // namespace

Matrix spd_fn(const Matrix& s, MatFn f) {
  SymEig e = sym_eig(s);
  if (f != MatFn::Exp) {
    const double lo = e.values.minCoeff();
    if (!(lo > 0.0)) {
      throw DomainError("spd_fn(" + std::string(to_string(f)) + "): non-positive eigenvalue " +
                            fmt(lo),
                        lo);
    }
  }
  Vector fv = e.values.unaryExpr([f](double x) { return apply_fn(f, x); });
  Matrix out = e.vectors * fv.asDiagonal() * e.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

SymMatrix spd_fn(const SymMatrix& s, MatFn f) { return SymMatrix(spd_fn(s.matrix(), f)); }

SpdMatrix spd_exp(const SymMatrix& s) { return SpdMatrix(spd_fn(s.matrix(), MatFn::Exp)); }
SymMatrix spd_log(const SpdMatrix& p) { return SymMatrix(spd_fn(p.matrix(), MatFn::Log)); }

Matrix cholesky(const Matrix& p) {
  require_square(p, "cholesky");
  require_finite(p, "cholesky");
  const Index n = p.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = p(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) {
      throw NotPositiveDefiniteError(
          "cholesky: pivot " + std::to_string(j) + " is " + fmt(d) + " (not positive)",
          static_cast<std::size_t>(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (p(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

LowerTri cholesky(const SpdMatrix& p) { return LowerTri(cholesky(p.matrix())); }

ThinQr qr_thin(const Matrix& x) {
  require_finite(x, "qr_thin");
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < p) throw ArgumentError("qr_thin: needs rows >= cols");
  Eigen::HouseholderQR<Matrix> qr(x);
  ThinQr out;
  out.q = qr.householderQ() * Matrix::Identity(n, p);
  out.r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = std::sqrt(op_norm_sq(x));
  for (Index i = 0; i < p; ++i) {
    if (std::abs(out.r(i, i)) < 1e-12 * scale || scale == 0.0) {
      throw RankError("qr_thin: rank deficient at column " + std::to_string(i));
    }
    if (out.r(i, i) < 0.0) {
      out.r.row(i) = -out.r.row(i);
      out.q.col(i) = -out.q.col(i);
    }
  }
  return out;
}

ThinSvd svd_thin(const Matrix& x) {
  require_finite(x, "svd_thin");
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw ConvergenceError("svd_thin: did not converge", x.norm());
  }
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  fix_column_signs(out.u, out.v);
  return out;
}

int exp_squarings(double norm1) {
  if (!(norm1 > 0.5)) return 0;
  return static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
}

Matrix mat_exp(const Matrix& a) {
  require_square(a, "mat_exp");
  require_finite(a, "mat_exp");
  const Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  const int s = exp_squarings(norm1);
  const Matrix as = a / std::ldexp(1.0, s);
  const Matrix id = Matrix::Identity(n, n);
  Matrix r = id;
  for (int k = kExpTaylorOrder; k >= 1; --k) {
    r = id + (as * r) / static_cast<double>(k);
  }
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

Matrix mat_log_orthogonal(const Matrix& o) {
  require_square(o, "mat_log_orthogonal");
  require_finite(o, "mat_log_orthogonal");
  const Index n = o.rows();
  if ((o.transpose() * o - Matrix::Identity(n, n)).norm() > 1e-8) {
    throw ArgumentError("mat_log_orthogonal: input is not orthogonal");
  }
  if (o.determinant() <= 0.0) {
    throw ArgumentError("mat_log_orthogonal: determinant is not positive");
  }
  Eigen::RealSchur<Matrix> schur(o);
  if (schur.info() != Eigen::Success) {
    throw ConvergenceError("mat_log_orthogonal: Schur decomposition failed", 0.0);
  }
  const Matrix& t = schur.matrixT();
  const Matrix& z = schur.matrixU();
  Matrix lt = Matrix::Zero(n, n);
  Index i = 0;
  while (i < n) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 1e-14) {
      const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double s = 0.5 * (t(i, i + 1) - t(i + 1, i));
      const double theta = std::atan2(s, c);
      if (std::abs(theta) > std::numbers::pi - 1e-8) {
        throw CutLocusError("mat_log_orthogonal: eigenvalue at -1");
      }
      lt(i, i + 1) = theta;
      lt(i + 1, i) = -theta;
      i += 2;
    } else {
      if (t(i, i) < 1.0 - 1e-8) {
        throw CutLocusError("mat_log_orthogonal: eigenvalue at -1");
      }
      i += 1;
    }
  }
  Matrix l = z * lt * z.transpose();
  return 0.5 * (l - l.transpose());
}

Matrix block_diag(std::span<const Matrix> ms) {
  if (ms.empty()) throw ArgumentError("block_diag: empty list");
  Index rows = 0, cols = 0;
  for (const Matrix& m : ms) {
    rows += m.rows();
    cols += m.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const Matrix& m : ms) {
    out.block(r, c, m.rows(), m.cols()) = m;
    r += m.rows();
    c += m.cols();
  }
  return out;
}

SpdMatrix concat_spd(std::span<const SpdMatrix> ps) {
  if (ps.empty()) throw ArgumentError("concat_spd: empty list");
  std::vector<Matrix> ms;
  ms.reserve(ps.size());
  for (const SpdMatrix& p : ps) ms.push_back(p.matrix());
  return SpdMatrix(block_diag(ms));
}

Matrix lower_strict(const Matrix& y) {
  require_square(y, "lower_strict");
  Matrix out = y.triangularView<Eigen::StrictlyLower>();
  return out;
}

Matrix diag_part(const Matrix& y) {
  require_square(y, "diag_part");
  return y.diagonal().asDiagonal();
}

Matrix half_lower(const Matrix& y) { return lower_strict(y) + 0.5 * diag_part(y); }

double frob(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace gyromat
