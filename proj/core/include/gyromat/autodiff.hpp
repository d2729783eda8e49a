#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "gyromat/linalg.hpp"

namespace gyromat::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Backward = std::function<void(const Matrix& grad)>;

// Define-by-run record of matrix primitives. A non-recording tape only keeps
// forward values, which makes it a plain evaluator for the same code.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var leaf(Matrix value);
  Var constant(Matrix value);
  Var push(std::string_view op, Matrix value, std::span<const Var> parents, Backward backward);
  Var push(std::string_view op, Matrix value, std::initializer_list<Var> parents,
           Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(Var v) const;
  void accumulate(Var v, const Matrix& g);

  // Seeds d loss = 1 and runs every recorded adjoint once, newest first.
  void backward(Var loss);
  // Zero matrix for nodes the loss does not reach.
  Matrix grad(Var v) const;
  std::string_view op(Var v) const { return nodes_[v.id()].op; }
  const std::vector<std::size_t>& parents(Var v) const { return nodes_[v.id()].parents; }

 private:
  struct Node {
    std::string_view op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    Backward backward;
    bool needs_grad = false;
    bool has_grad = false;
  };
  std::deque<Node> nodes_;
  bool recording_;
};

struct ScalarFn {
  std::string_view name;
  double (*f)(double);
  double (*df)(double);
  // Inputs must be > lo.
  double lo;
};

namespace fn {
extern const ScalarFn exp;
extern const ScalarFn log;
extern const ScalarFn sqrt;
extern const ScalarFn invsqrt;
extern const ScalarFn recip;
// arctan(sqrt(x)) / sqrt(x), continued analytically near 0.
extern const ScalarFn atan_ratio;
}  // namespace fn

Var constant(Tape& t, Matrix value);
Var constant_like(Var a, Matrix value);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a);
Var operator*(Var a, Var b);
Var operator*(double c, Var a);
Var operator*(Var a, double c);
Var add_identity(Var a, double c);
Var scale(Var s, Var a);
Var transpose(Var a);
Var trace(Var a);
Var dot(Var a, Var b);
Var sum(Var a);
Var sym(Var a);
Var hadamard(Var a, Var b);
Var cwise(Var a, const ScalarFn& f);
Var diag_map(Var a, const ScalarFn& f);
Var lower_strict(Var a);
Var diag_part(Var a);
Var half_lower(Var a);
Var inverse(Var a);
Var reshape(Var a, Index rows, Index cols);
Var block(Var a, Index r, Index c, Index nr, Index nc);
Var block_diag(std::span<const Var> parts);
Var hcat(std::span<const Var> parts);
Var vcat(std::span<const Var> parts);
// sum_k s_k * mats[k], with s_k 1x1.
Var linear_combination(std::span<const Var> scalars, std::span<const Matrix> mats);

// Input is symmetrized; the adjoint is symmetric.
Var spd_fn(Var a, const ScalarFn& f);
Var spd_fn(Var a, MatFn f);

struct EigVars {
  Var vectors;
  Var values;  // column, descending
};
// Adjoint drops eigenvalue pairs closer than 1e-9 (gauge directions).
EigVars sym_eig(Var a);

Var cholesky(Var a);

struct QrVars {
  Var q;
  Var r;
};
QrVars qr_thin(Var a);

struct SvdVars {
  Var u;
  Var sigma;  // column
  Var v;
};
SvdVars svd_thin(Var a);

Var mat_exp(Var a);
// Oracle-only. Throws UnsupportedOpError on a recording tape.
Var mat_log_orthogonal(Var a);

// logits is a column (or row) vector.
Var cross_entropy(Var logits, Index label);
Vector softmax(const Vector& z);

using LeafFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradcheckResult {
  double max_rel_err = 0.0;
  std::size_t leaf = 0;
  Index row = 0;
  Index col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences, h = 1e-5 * max(1, |x|), error normalised by
// max(1, |analytic|).
GradcheckResult gradcheck(const LeafFunction& f, const std::vector<Matrix>& x0);

}  // namespace gyromat::ad
