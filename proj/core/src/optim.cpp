#include "gyromat/optim.hpp"

#include <cmath>

namespace gyromat::nn {

std::size_t ParamStore::add(std::string name, Matrix init, bool decay) {
  require_finite(init, "ParamStore::add");
  if (find(name) != size()) throw ArgumentError("duplicate parameter name '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  decay_.push_back(decay);
  return values_.size() - 1;
}

std::size_t ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return names_.size();
}

std::vector<ad::Var> ParamStore::bind(ad::Tape& t) const {
  std::vector<ad::Var> out;
  out.reserve(values_.size());
  for (const Matrix& v : values_) out.push_back(t.leaf(v));
  return out;
}

std::vector<Matrix> ParamStore::grads(const ad::Tape& t, const std::vector<ad::Var>& bound) const {
  std::vector<Matrix> g;
  g.reserve(bound.size());
  for (const ad::Var& v : bound) g.push_back(t.grad(v));
  return g;
}

bool ParamStore::all_finite() const {
  for (const Matrix& v : values_)
    if (!v.allFinite()) return false;
  return true;
}

void Adam::step(ParamStore& params, const std::vector<Matrix>& grads) {
  if (grads.size() != params.size()) throw ArgumentError("Adam: gradient count mismatch");
  if (m_.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
      v_.push_back(m_.back());
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].allFinite()) throw NumericalError("Adam: non-finite gradient for " + params.name(i));
    const double wd = params.decays(i) ? opt_.weight_decay : 0.0;
    const Matrix g = grads[i] + wd * params.value(i);
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g.cwiseProduct(g);
    params.value(i).array() -=
        opt_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opt_.eps);
  }
}

}  // namespace gyromat::nn
