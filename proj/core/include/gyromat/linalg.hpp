#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gyromat/errors.hpp"

namespace gyromat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Throws NumericalError if any entry is NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);
void require_square(const Matrix& m, std::string_view what);

class SymMatrix {
 public:
  SymMatrix() = default;
  // Symmetrizes (S + S^T)/2.
  explicit SymMatrix(const Matrix& s);
  static SymMatrix identity(Index n);
  static SymMatrix zero(Index n);

  const Matrix& matrix() const { return m_; }
  Index size() const { return m_.rows(); }
  operator const Matrix&() const { return m_; }

 private:
  Matrix m_;
};

class SpdMatrix {
 public:
  SpdMatrix() = default;
  // Symmetrizes and checks lambda_min > 1e-12 * lambda_max.
  explicit SpdMatrix(const Matrix& s);
  explicit SpdMatrix(const SymMatrix& s);
  static SpdMatrix identity(Index n);

  const Matrix& matrix() const { return s_.matrix(); }
  const SymMatrix& sym() const { return s_; }
  Index size() const { return s_.size(); }
  operator const Matrix&() const { return s_.matrix(); }

 private:
  SymMatrix s_;
};

class LowerTri {
 public:
  LowerTri() = default;
  // Rejects nonzero entries above the diagonal.
  explicit LowerTri(const Matrix& l);

  const Matrix& matrix() const { return m_; }
  Index size() const { return m_.rows(); }
  operator const Matrix&() const { return m_; }

 private:
  Matrix m_;
};

struct SymEig {
  Matrix vectors;  // columns, orthonormal
  Vector values;   // descending
};

struct ThinQr {
  Matrix q;
  Matrix r;
};

struct ThinSvd {
  Matrix u;
  Vector sigma;  // descending, >= 0
  Matrix v;
};

enum class MatFn { Exp, Log, Sqrt, InvSqrt };
std::string_view to_string(MatFn f);

// Makes the largest-magnitude entry of every column positive.
void fix_column_signs(Matrix& q);
void fix_column_signs(Matrix& a, Matrix& b);

SymEig sym_eig(const SymMatrix& s);
SymEig sym_eig(const Matrix& s);
Matrix spd_fn(const Matrix& s, MatFn f);
SymMatrix spd_fn(const SymMatrix& s, MatFn f);
SpdMatrix spd_exp(const SymMatrix& s);
SymMatrix spd_log(const SpdMatrix& p);
LowerTri cholesky(const SpdMatrix& p);
Matrix cholesky(const Matrix& p);
ThinQr qr_thin(const Matrix& x);
ThinSvd svd_thin(const Matrix& x);

// Scaling and squaring around a fixed-order Taylor core.
inline constexpr int kExpTaylorOrder = 14;
int exp_squarings(double norm1);
Matrix mat_exp(const Matrix& a);

// Principal log of a rotation; oracle use only.
Matrix mat_log_orthogonal(const Matrix& o);

SpdMatrix concat_spd(std::span<const SpdMatrix> ps);
Matrix block_diag(std::span<const Matrix> ms);

Matrix lower_strict(const Matrix& y);
Matrix diag_part(const Matrix& y);
// Strict lower part plus half the diagonal.
Matrix half_lower(const Matrix& y);

double frob(const Matrix& a, const Matrix& b);

}  // namespace gyromat
