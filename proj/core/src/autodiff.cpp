#include "gyromat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gyromat/csv.hpp"

namespace gyromat::ad {

const Matrix& Var::value() const {
  if (!tape_) throw ArgumentError("Var: uninitialised handle");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ArgumentError("Var::scalar on a non-scalar");
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  require_finite(value, "leaf");
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.needs_grad = recording_;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  require_finite(value, "constant");
  Node n;
  n.op = "const";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(std::string_view op, Matrix value, std::span<const Var> parents,
               Backward backward) {
  if (!value.allFinite()) {
    throw NumericalError(std::string(op) + ": non-finite forward value");
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ArgumentError(std::string(op) + ": operands on different tapes");
    needs = needs || nodes_[p.id()].needs_grad;
  }
  if (recording_ && needs) {
    n.needs_grad = true;
    n.backward = std::move(backward);
    n.parents.reserve(parents.size());
    for (const Var& p : parents) n.parents.push_back(p.id());
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(std::string_view op, Matrix value, std::initializer_list<Var> parents,
               Backward backward) {
  return push(op, std::move(value), std::span<const Var>(parents.begin(), parents.size()),
              std::move(backward));
}

bool Tape::needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw ArgumentError("accumulate: gradient shape mismatch at op " + std::string(n.op));
  }
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ArgumentError("backward: loss on another tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw ArgumentError("backward: loss is not scalar");
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  if (!nodes_[loss.id()].needs_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  nodes_[loss.id()].has_grad = true;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) {
      const Matrix g = n.grad;
      n.backward(g);
    }
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

namespace {

bool needs(Var v) { return v.tape()->needs_grad(v); }
void acc(Var v, const Matrix& g) { v.tape()->accumulate(v, g); }

void same_shape(Var a, Var b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double f_exp(double x) { return std::exp(x); }
double f_log(double x) { return std::log(x); }
double df_log(double x) { return 1.0 / x; }
double f_sqrt(double x) { return std::sqrt(x); }
double df_sqrt(double x) { return 0.5 / std::sqrt(x); }
double f_invsqrt(double x) { return 1.0 / std::sqrt(x); }
double df_invsqrt(double x) { return -0.5 / (x * std::sqrt(x)); }
double f_recip(double x) { return 1.0 / x; }
double df_recip(double x) { return -1.0 / (x * x); }

double f_atan_ratio(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x / 3.0 + x * x / 5.0 - x * x * x / 7.0;
  if (x < 0.0) {
    const double r = std::sqrt(-x);
    return std::atanh(r) / r;
  }
  const double r = std::sqrt(x);
  return std::atan(r) / r;
}

double df_atan_ratio(double x) {
  if (std::abs(x) < 1e-4) return -1.0 / 3.0 + 2.0 * x / 5.0 - 3.0 * x * x / 7.0;
  if (x < 0.0) {
    const double r = std::sqrt(-x);
    return (r / (1.0 + x) - std::atanh(r)) / (2.0 * x * r);
  }
  const double r = std::sqrt(x);
  return (r / (1.0 + x) - std::atan(r)) / (2.0 * x * r);
}

const ScalarFn& to_scalar_fn(MatFn f) {
  switch (f) {
    case MatFn::Exp: return fn::exp;
    case MatFn::Log: return fn::log;
    case MatFn::Sqrt: return fn::sqrt;
    case MatFn::InvSqrt: return fn::invsqrt;
  }
  return fn::exp;
}

void check_domain(const ScalarFn& f, double x, std::string_view op) {
  if (!(x > f.lo)) {
    throw DomainError(std::string(op) + "(" + std::string(f.name) + "): argument " +
                          format_double(x) + " outside domain",
                      x);
  }
}

}  // namespace

namespace fn {
const ScalarFn exp{"exp", f_exp, f_exp, -std::numeric_limits<double>::infinity()};
const ScalarFn log{"log", f_log, df_log, 0.0};
const ScalarFn sqrt{"sqrt", f_sqrt, df_sqrt, 0.0};
const ScalarFn invsqrt{"invsqrt", f_invsqrt, df_invsqrt, 0.0};
const ScalarFn recip{"recip", f_recip, df_recip, 0.0};
// Continued as atanh(sqrt(-x))/sqrt(-x) below 0 so rounding in M^T M is harmless.
const ScalarFn atan_ratio{"atan_ratio", f_atan_ratio, df_atan_ratio, -0.5};
}  // namespace fn

Var constant(Tape& t, Matrix value) { return t.constant(std::move(value)); }
Var constant_like(Var a, Matrix value) { return a.tape()->constant(std::move(value)); }

Var operator+(Var a, Var b) {
  same_shape(a, b, "add");
  return a.tape()->push("add", a.value() + b.value(), {a, b}, [a, b](const Matrix& g) {
    acc(a, g);
    acc(b, g);
  });
}

Var operator-(Var a, Var b) {
  same_shape(a, b, "sub");
  return a.tape()->push("sub", a.value() - b.value(), {a, b}, [a, b](const Matrix& g) {
    acc(a, g);
    if (needs(b)) acc(b, -g);
  });
}

Var operator-(Var a) {
  return a.tape()->push("neg", -a.value(), {a}, [a](const Matrix& g) { acc(a, -g); });
}

Var operator*(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw ArgumentError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                        std::to_string(b.rows()));
  }
  return a.tape()->push("matmul", a.value() * b.value(), {a, b}, [a, b](const Matrix& g) {
    if (needs(a)) acc(a, g * b.value().transpose());
    if (needs(b)) acc(b, a.value().transpose() * g);
  });
}

Var operator*(double c, Var a) {
  return a.tape()->push("scale", c * a.value(), {a}, [a, c](const Matrix& g) { acc(a, c * g); });
}

Var operator*(Var a, double c) { return c * a; }

Var add_identity(Var a, double c) {
  require_square(a.value(), "add_identity");
  Matrix v = a.value();
  v.diagonal().array() += c;
  return a.tape()->push("add_identity", std::move(v), {a}, [a](const Matrix& g) { acc(a, g); });
}

Var scale(Var s, Var a) {
  const double sv = s.scalar();
  return a.tape()->push("scale_var", sv * a.value(), {s, a}, [s, a, sv](const Matrix& g) {
    if (needs(s)) acc(s, Matrix::Constant(1, 1, frob(g, a.value())));
    if (needs(a)) acc(a, sv * g);
  });
}

Var transpose(Var a) {
  return a.tape()->push("transpose", a.value().transpose(), {a},
                        [a](const Matrix& g) { acc(a, g.transpose()); });
}

Var trace(Var a) {
  require_square(a.value(), "trace");
  return a.tape()->push("trace", Matrix::Constant(1, 1, a.value().trace()), {a},
                        [a](const Matrix& g) {
                          acc(a, g(0, 0) * Matrix::Identity(a.rows(), a.cols()));
                        });
}

Var dot(Var a, Var b) {
  same_shape(a, b, "dot");
  return a.tape()->push("dot", Matrix::Constant(1, 1, frob(a.value(), b.value())), {a, b},
                        [a, b](const Matrix& g) {
                          if (needs(a)) acc(a, g(0, 0) * b.value());
                          if (needs(b)) acc(b, g(0, 0) * a.value());
                        });
}

Var sum(Var a) {
  return a.tape()->push("sum", Matrix::Constant(1, 1, a.value().sum()), {a},
                        [a](const Matrix& g) {
                          acc(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                        });
}

Var sym(Var a) {
  require_square(a.value(), "sym");
  return a.tape()->push("sym", symmetrize(a.value()), {a},
                        [a](const Matrix& g) { acc(a, symmetrize(g)); });
}

Var hadamard(Var a, Var b) {
  same_shape(a, b, "hadamard");
  return a.tape()->push("hadamard", a.value().cwiseProduct(b.value()), {a, b},
                        [a, b](const Matrix& g) {
                          if (needs(a)) acc(a, g.cwiseProduct(b.value()));
                          if (needs(b)) acc(b, g.cwiseProduct(a.value()));
                        });
}

Var cwise(Var a, const ScalarFn& f) {
  const Matrix& x = a.value();
  for (Index i = 0; i < x.size(); ++i) check_domain(f, x.data()[i], "cwise");
  Matrix y = x.unaryExpr([&f](double v) { return f.f(v); });
  const ScalarFn* fp = &f;
  return a.tape()->push("cwise", std::move(y), {a}, [a, fp](const Matrix& g) {
    acc(a, g.cwiseProduct(a.value().unaryExpr([fp](double v) { return fp->df(v); })));
  });
}

Var diag_map(Var a, const ScalarFn& f) {
  require_square(a.value(), "diag_map");
  const Vector d = a.value().diagonal();
  for (Index i = 0; i < d.size(); ++i) check_domain(f, d(i), "diag_map");
  Matrix y = d.unaryExpr([&f](double v) { return f.f(v); }).asDiagonal();
  const ScalarFn* fp = &f;
  return a.tape()->push("diag_map", std::move(y), {a}, [a, d, fp](const Matrix& g) {
    Vector gd = g.diagonal().cwiseProduct(d.unaryExpr([fp](double v) { return fp->df(v); }));
    acc(a, Matrix(gd.asDiagonal()));
  });
}

Var lower_strict(Var a) {
  return a.tape()->push("lower_strict", gyromat::lower_strict(a.value()), {a},
                        [a](const Matrix& g) { acc(a, gyromat::lower_strict(g)); });
}

Var diag_part(Var a) {
  return a.tape()->push("diag_part", gyromat::diag_part(a.value()), {a},
                        [a](const Matrix& g) { acc(a, gyromat::diag_part(g)); });
}

Var half_lower(Var a) {
  return a.tape()->push("half_lower", gyromat::half_lower(a.value()), {a},
                        [a](const Matrix& g) { acc(a, gyromat::half_lower(g)); });
}

Var inverse(Var a) {
  require_square(a.value(), "inverse");
  Eigen::FullPivLU<Matrix> lu(a.value());
  if (!lu.isInvertible()) throw RankError("inverse: singular matrix");
  Matrix y = lu.inverse();
  return a.tape()->push("inverse", y, {a}, [a, y](const Matrix& g) {
    acc(a, -y.transpose() * g * y.transpose());
  });
}

Var reshape(Var a, Index rows, Index cols) {
  if (rows * cols != a.value().size()) throw ArgumentError("reshape: size mismatch");
  Matrix y = a.value().reshaped(rows, cols);
  const Index r0 = a.rows(), c0 = a.cols();
  return a.tape()->push("reshape", std::move(y), {a}, [a, r0, c0](const Matrix& g) {
    acc(a, Matrix(g.reshaped(r0, c0)));
  });
}

Var block(Var a, Index r, Index c, Index nr, Index nc) {
  if (r < 0 || c < 0 || r + nr > a.rows() || c + nc > a.cols()) {
    throw ArgumentError("block: out of range");
  }
  return a.tape()->push("block", a.value().block(r, c, nr, nc), {a},
                        [a, r, c, nr, nc](const Matrix& g) {
                          Matrix full = Matrix::Zero(a.rows(), a.cols());
                          full.block(r, c, nr, nc) = g;
                          acc(a, full);
                        });
}

namespace {

Var concat(std::span<const Var> parts, bool diagonal, bool horizontal, std::string_view op) {
  if (parts.empty()) throw ArgumentError(std::string(op) + ": empty list");
  Index rows = 0, cols = 0;
  for (const Var& p : parts) {
    if (diagonal) {
      rows += p.rows();
      cols += p.cols();
    } else if (horizontal) {
      if (rows && p.rows() != rows) throw ArgumentError("hcat: row mismatch");
      rows = p.rows();
      cols += p.cols();
    } else {
      if (cols && p.cols() != cols) throw ArgumentError("vcat: column mismatch");
      cols = p.cols();
      rows += p.rows();
    }
  }
  Matrix y = Matrix::Zero(rows, cols);
  std::vector<std::pair<Index, Index>> offsets;
  Index r = 0, c = 0;
  for (const Var& p : parts) {
    offsets.emplace_back(r, c);
    y.block(r, c, p.rows(), p.cols()) = p.value();
    if (diagonal || !horizontal) r += p.rows();
    if (diagonal || horizontal) c += p.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts.front().tape()->push(op, std::move(y), parts, [ps, offsets](const Matrix& g) {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (needs(ps[k])) {
        acc(ps[k], g.block(offsets[k].first, offsets[k].second, ps[k].rows(), ps[k].cols()));
      }
    }
  });
}

}  // namespace

Var block_diag(std::span<const Var> parts) { return concat(parts, true, false, "block_diag"); }
Var hcat(std::span<const Var> parts) { return concat(parts, false, true, "hcat"); }
Var vcat(std::span<const Var> parts) { return concat(parts, false, false, "vcat"); }

Var linear_combination(std::span<const Var> scalars, std::span<const Matrix> mats) {
  if (scalars.size() != mats.size() || scalars.empty()) {
    throw ArgumentError("linear_combination: size mismatch");
  }
  Matrix y = Matrix::Zero(mats.front().rows(), mats.front().cols());
  for (std::size_t k = 0; k < scalars.size(); ++k) y += scalars[k].scalar() * mats[k];
  std::vector<Var> ss(scalars.begin(), scalars.end());
  std::vector<Matrix> ms(mats.begin(), mats.end());
  return scalars.front().tape()->push("linear_combination", std::move(y), scalars,
                                      [ss, ms](const Matrix& g) {
                                        for (std::size_t k = 0; k < ss.size(); ++k) {
                                          if (needs(ss[k])) {
                                            acc(ss[k], Matrix::Constant(1, 1, frob(g, ms[k])));
                                          }
                                        }
                                      });
}

Var spd_fn(Var a, const ScalarFn& f) {
  require_square(a.value(), "spd_fn");
  SymEig e = gyromat::sym_eig(a.value());
  const Index n = e.values.size();
  for (Index i = 0; i < n; ++i) check_domain(f, e.values(i), "spd_fn");
  const Vector fv = e.values.unaryExpr([&f](double v) { return f.f(v); });
  Matrix y = e.vectors * fv.asDiagonal() * e.vectors.transpose();
  y = symmetrize(y);
  const ScalarFn* fp = &f;
  return a.tape()->push("spd_fn", std::move(y), {a}, [a, e, fv, fp](const Matrix& g) {
    const Index m = e.values.size();
    Matrix loewner(m, m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        const double li = e.values(i), lj = e.values(j);
        loewner(i, j) = std::abs(li - lj) < 1e-9 ? fp->df(0.5 * (li + lj))
                                                 : (fv(i) - fv(j)) / (li - lj);
      }
    }
    const Matrix inner = e.vectors.transpose() * symmetrize(g) * e.vectors;
    acc(a, e.vectors * loewner.cwiseProduct(inner) * e.vectors.transpose());
  });
}

Var spd_fn(Var a, MatFn f) { return spd_fn(a, to_scalar_fn(f)); }

EigVars sym_eig(Var a) {
  require_square(a.value(), "sym_eig");
  SymEig e = gyromat::sym_eig(a.value());
  Tape* t = a.tape();
  EigVars out;
  out.values = t->push("sym_eig.values", e.values, {a}, [a, e](const Matrix& g) {
    acc(a, e.vectors * g.col(0).asDiagonal() * e.vectors.transpose());
  });
  out.vectors = t->push("sym_eig.vectors", e.vectors, {a}, [a, e](const Matrix& g) {
    const Index m = e.values.size();
    Matrix f = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        const double d = e.values(j) - e.values(i);
        if (i != j && std::abs(d) >= 1e-9) f(i, j) = 1.0 / d;
      }
    }
    const Matrix inner = f.cwiseProduct(e.vectors.transpose() * g);
    acc(a, symmetrize(e.vectors * inner * e.vectors.transpose()));
  });
  return out;
}

Var cholesky(Var a) {
  require_square(a.value(), "cholesky");
  Matrix l = gyromat::cholesky(symmetrize(a.value()));
  return a.tape()->push("cholesky", l, {a}, [a, l](const Matrix& g) {
    Matrix phi = l.transpose() * g;
    phi = gyromat::lower_strict(phi) + 0.5 * gyromat::diag_part(phi);
    const auto lt = l.triangularView<Eigen::Lower>();
    // L^{-T} phi L^{-1}
    Matrix x = lt.transpose().solve(phi);
    x = lt.transpose().solve(x.transpose()).transpose();
    acc(a, symmetrize(x));
  });
}

QrVars qr_thin(Var a) {
  ThinQr f = gyromat::qr_thin(a.value());
  Tape* t = a.tape();
  auto h_of = [](const Matrix& gm) -> Matrix {
    Matrix h = gm.triangularView<Eigen::Upper>();
    h += gyromat::lower_strict(gm.transpose());
    return h;
  };
  auto r_inv_t = [](const Matrix& r, const Matrix& m) -> Matrix {
    // m R^{-T}
    return r.triangularView<Eigen::Upper>().solve(m.transpose()).transpose();
  };
  QrVars out;
  out.q = t->push("qr.q", f.q, {a}, [a, f, h_of, r_inv_t](const Matrix& g) {
    const Matrix gm = -f.q.transpose() * g;
    acc(a, r_inv_t(f.r, g + f.q * h_of(gm)));
  });
  out.r = t->push("qr.r", f.r, {a}, [a, f, h_of, r_inv_t](const Matrix& g) {
    const Matrix gm = g * f.r.transpose();
    acc(a, r_inv_t(f.r, f.q * h_of(gm)));
  });
  return out;
}

SvdVars svd_thin(Var a) {
  ThinSvd s = gyromat::svd_thin(a.value());
  Tape* t = a.tape();
  const Index k = s.sigma.size();
  auto gap_matrix = [s, k]() {
    Matrix f = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < k; ++j) {
        if (i == j) continue;
        if (std::abs(s.sigma(i) - s.sigma(j)) < 1e-8) {
          throw ConditioningError("svd_thin adjoint: singular-value gap below 1e-8");
        }
        f(i, j) = 1.0 / (s.sigma(j) * s.sigma(j) - s.sigma(i) * s.sigma(i));
      }
    }
    return f;
  };
  auto inv_sigma = [s, k]() {
    for (Index i = 0; i < k; ++i) {
      if (s.sigma(i) < 1e-8) {
        throw ConditioningError("svd_thin adjoint: singular value below 1e-8");
      }
    }
    return Vector(s.sigma.cwiseInverse());
  };
  SvdVars out;
  out.sigma = t->push("svd.sigma", s.sigma, {a}, [a, s](const Matrix& g) {
    acc(a, s.u * g.col(0).asDiagonal() * s.v.transpose());
  });
  out.u = t->push("svd.u", s.u, {a}, [a, s, gap_matrix, inv_sigma](const Matrix& g) {
    const Matrix f = gap_matrix();
    const Matrix ug = s.u.transpose() * g;
    const Matrix j = f.cwiseProduct(ug - ug.transpose());
    Matrix res = s.u * j * s.sigma.asDiagonal() * s.v.transpose();
    const Index m = s.u.rows();
    if (m > s.sigma.size()) {
      const Matrix proj = Matrix::Identity(m, m) - s.u * s.u.transpose();
      res += proj * g * inv_sigma().asDiagonal() * s.v.transpose();
    }
    acc(a, res);
  });
  out.v = t->push("svd.v", s.v, {a}, [a, s, gap_matrix, inv_sigma](const Matrix& g) {
    const Matrix f = gap_matrix();
    const Matrix vg = s.v.transpose() * g;
    const Matrix kk = f.cwiseProduct(vg - vg.transpose());
    Matrix res = s.u * s.sigma.asDiagonal() * kk * s.v.transpose();
    const Index n = s.v.rows();
    if (n > s.sigma.size()) {
      const Matrix proj = Matrix::Identity(n, n) - s.v * s.v.transpose();
      res += s.u * inv_sigma().asDiagonal() * g.transpose() * proj;
    }
    acc(a, res);
  });
  return out;
}

Var mat_exp(Var a) {
  require_square(a.value(), "mat_exp");
  const double norm1 = a.value().cwiseAbs().colwise().sum().maxCoeff();
  const int s = exp_squarings(norm1);
  const Var as = a * std::ldexp(1.0, -s);
  const Index n = a.rows();
  Var r = constant_like(a, Matrix::Identity(n, n));
  for (int k = kExpTaylorOrder; k >= 1; --k) {
    r = add_identity((as * r) * (1.0 / static_cast<double>(k)), 1.0);
  }
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

Var mat_log_orthogonal(Var a) {
  if (a.tape()->recording()) {
    throw UnsupportedOpError("mat_log_orthogonal is oracle-only and cannot be recorded");
  }
  return a.tape()->constant(gyromat::mat_log_orthogonal(a.value()));
}

Vector softmax(const Vector& z) {
  const double mx = z.maxCoeff();
  Vector e = (z.array() - mx).exp();
  return e / e.sum();
}

Var cross_entropy(Var logits, Index label) {
  const Matrix& z = logits.value();
  if (z.rows() != 1 && z.cols() != 1) throw ArgumentError("cross_entropy: logits not a vector");
  const Vector v = z.reshaped();
  if (label < 0 || label >= v.size()) {
    throw ArgumentError("cross_entropy: label " + std::to_string(label) + " out of range");
  }
  const double mx = v.maxCoeff();
  const double lse = mx + std::log((v.array() - mx).exp().sum());
  const double loss = lse - v(label);
  return logits.tape()->push("cross_entropy", Matrix::Constant(1, 1, loss), {logits},
                             [logits, v, label](const Matrix& g) {
                               Vector d = softmax(v);
                               d(label) -= 1.0;
                               acc(logits, Matrix(g(0, 0) * d.reshaped(logits.rows(),
                                                                      logits.cols())));
                             });
}

GradcheckResult gradcheck(const LeafFunction& f, const std::vector<Matrix>& x0) {
  GradcheckResult res;
  std::vector<Matrix> analytic;
  {
    Tape t(true);
    std::vector<Var> leaves;
    for (const Matrix& x : x0) leaves.push_back(t.leaf(x));
    Var loss = f(t, leaves);
    if (!std::isfinite(loss.scalar())) throw NumericalError("gradcheck: loss not finite");
    t.backward(loss);
    for (const Var& l : leaves) analytic.push_back(t.grad(l));
  }
  auto eval = [&f](const std::vector<Matrix>& xs) {
    Tape t(false);
    std::vector<Var> leaves;
    for (const Matrix& x : xs) leaves.push_back(t.leaf(x));
    const double v = f(t, leaves).scalar();
    if (!std::isfinite(v)) throw NumericalError("gradcheck: f not finite at a perturbed point");
    return v;
  };
  std::vector<Matrix> xs = x0;
  for (std::size_t l = 0; l < xs.size(); ++l) {
    for (Index j = 0; j < xs[l].cols(); ++j) {
      for (Index i = 0; i < xs[l].rows(); ++i) {
        const double x = x0[l](i, j);
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        xs[l](i, j) = x + h;
        const double fp = eval(xs);
        xs[l](i, j) = x - h;
        const double fm = eval(xs);
        xs[l](i, j) = x;
        const double num = (fp - fm) / (2.0 * h);
        const double an = analytic[l](i, j);
        const double err = std::abs(an - num) / std::max(1.0, std::abs(an));
        if (err >= res.max_rel_err) {
          res = {err, l, i, j, an, num};
        }
      }
    }
  }
  return res;
}

}  // namespace gyromat::ad
