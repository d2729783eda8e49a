#pragma once

#include <string>
#include <vector>

#include "gyromat/autodiff.hpp"
#include "gyromat/linalg.hpp"

namespace gyromat::nn {

// Unconstrained trainable matrices, addressed by registration index.
class ParamStore {
 public:
  // decay = false exempts the parameter from weight decay.
  std::size_t add(std::string name, Matrix init, bool decay = true);
  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  bool decays(std::size_t i) const { return decay_[i]; }
  std::size_t find(const std::string& name) const;

  // One leaf per parameter, same order.
  std::vector<ad::Var> bind(ad::Tape& t) const;
  std::vector<Matrix> grads(const ad::Tape& t, const std::vector<ad::Var>& bound) const;
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::vector<bool> decay_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

class Adam {
 public:
  explicit Adam(AdamOptions opt = {}) : opt_(opt) {}
  void step(ParamStore& params, const std::vector<Matrix>& grads);
  long steps() const { return t_; }

 private:
  AdamOptions opt_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace gyromat::nn
