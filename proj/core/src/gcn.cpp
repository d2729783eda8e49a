#include "gyromat/gcn.hpp"

#include <cmath>

#include "gyromat/grassmann.hpp"
#include "gyromat/nn.hpp"
#include "gyromat/rng.hpp"

namespace gyromat::nn {

using ad::Var;

double gcn_coefficient(const data::Graph& g, Index i, Index j) {
  return 1.0 / std::sqrt(static_cast<double>(g.degree(i) * g.degree(j)));
}

GcnModel::GcnModel(const GcnSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.p < 1 || spec.p >= spec.n) throw ConfigError("gcn: need 1 <= p < n");
  if (spec.feature_dim < 1) throw ConfigError("gcn: feature_dim must be >= 1");
  if (spec.classes < 2) throw ConfigError("gcn: need at least 2 classes");
  if (spec.layers < 0) throw ConfigError("gcn: layers must be >= 0");
  Rng rng = make_rng(seed, "init");
  const Index k = spec.p * (spec.n - spec.p);
  // Small embeddings keep principal angles well inside the log domain.
  embed_w_ = params_.add("embed.w", normal_matrix(rng, k, spec.feature_dim,
                                                  0.1 / std::sqrt(static_cast<double>(spec.feature_dim))));
  embed_b_ = params_.add("embed.b", Matrix::Zero(k, 1));
  for (int l = 0; l < spec.layers; ++l) {
    const std::string s = std::to_string(l);
    layer_m_.push_back(params_.add("layer." + s + ".m", normal_matrix(rng, spec.p, spec.n - spec.p, 0.1)));
    layer_bias_.push_back(params_.add("layer." + s + ".bias", Matrix::Zero(spec.p, spec.n - spec.p)));
  }
  // Tangent features are bounded by pi/2, so the head carries the logit scale.
  head_w_ = params_.add("head.w", normal_matrix(rng, spec.classes, k, 3.0 / std::sqrt(static_cast<double>(k))),
                        false);
  head_b_ = params_.add("head.b", Matrix::Zero(spec.classes, 1), false);
}

Var GcnModel::point(Var b) const {
  return spec_.perspective == GrPerspective::Onb ? gr::var::skew_param_onb(b) : gr::var::skew_param(b);
}

Var GcnModel::log_identity(Var x) const {
  return spec_.perspective == GrPerspective::Onb ? gr::var::log_identity_onb(x)
                                                 : gr::var::log_identity(x, spec_.p);
}

Var GcnModel::node_log(std::size_t node, Var x) const {
  try {
    return log_identity(x);
  } catch (const CutLocusError& e) {
    throw CutLocusError("node " + std::to_string(node) + ": " + e.what());
  }
}

// Left gyroaddition by the point whose exp-commutator is e.
Var GcnModel::act(Var e, Var x) const {
  return spec_.perspective == GrPerspective::Onb ? e * x : ad::sym(e * x * ad::transpose(e));
}

std::vector<Var> GcnModel::embed(std::span<const Var> bound, const Matrix& features) const {
  if (features.cols() != spec_.feature_dim) throw ArgumentError("gcn: feature dimension mismatch");
  const Index nodes = features.rows();
  Var w = bound[embed_w_];
  Var z = w * ad::constant_like(w, features.transpose()) +
          bound[embed_b_] * ad::constant_like(w, Matrix::Ones(1, nodes));
  std::vector<Var> out;
  for (Index i = 0; i < nodes; ++i) {
    Var b = ad::reshape(ad::block(z, 0, i, z.rows(), 1), spec_.p, spec_.n - spec_.p);
    out.push_back(point(b));
  }
  return out;
}

std::vector<Var> GcnModel::layer(std::span<const Var> bound, int l, const data::Graph& g,
                                 const std::vector<Var>& xs) const {
  const auto li = static_cast<std::size_t>(l);
  const Index p = spec_.p;
  Var em = ad::mat_exp(gr::var::commutator_identity(log_identity(point(bound[layer_m_[li]])), p));
  Var eb = ad::mat_exp(gr::var::commutator_identity(log_identity(point(bound[layer_bias_[li]])), p));
  std::vector<Var> logs;
  for (std::size_t j = 0; j < xs.size(); ++j) logs.push_back(node_log(j, act(em, xs[j])));
  std::vector<Var> out;
  for (Index i = 0; i < g.nodes; ++i) {
    Var agg;
    for (Index j : g.adj[static_cast<std::size_t>(i)]) {
      Var term = gcn_coefficient(g, i, j) * logs[static_cast<std::size_t>(j)];
      agg = agg.valid() ? agg + term : term;
    }
    Var y;
    if (spec_.perspective == GrPerspective::Onb) {
      Var q = ad::mat_exp(gr::var::commutator_identity(agg, p)) *
              ad::constant_like(agg, gr::tilde_np(spec_.n, p));
      y = gr::var::nonlinearity_onb(act(eb, q));
    } else {
      y = gr::var::nonlinearity(act(eb, gr::var::exp_identity(agg, p)), p);
    }
    out.push_back(y);
  }
  return out;
}

Var GcnModel::head(std::span<const Var> bound, const std::vector<Var>& xs) const {
  const Index p = spec_.p, q = spec_.n - spec_.p;
  std::vector<Var> cols;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    cols.push_back(ad::reshape(ad::block(node_log(j, xs[j]), 0, p, p, q), p * q, 1));
  }
  Var f = ad::hcat(cols);
  Var w = bound[head_w_];
  return w * f + bound[head_b_] * ad::constant_like(w, Matrix::Ones(1, f.cols()));
}

Var GcnModel::logits(std::span<const Var> bound, const data::Graph& g) const {
  std::vector<Var> xs = embed(bound, g.features);
  for (int l = 0; l < spec_.layers; ++l) {
    try {
      xs = layer(bound, l, g, xs);
    } catch (const CutLocusError& e) {
      throw CutLocusError("gcn layer " + std::to_string(l) + ": " + e.what());
    }
  }
  try {
    return head(bound, xs);
  } catch (const CutLocusError& e) {
    throw CutLocusError(std::string("gcn head: ") + e.what());
  }
}

void GcnModel::check_invariants() const {
  if (!params_.all_finite()) throw NumericalError("gcn: non-finite parameter");
  for (std::size_t i = 0; i < layer_m_.size(); ++i) {
    (void)gr::skew_param_onb(params_.value(layer_m_[i]));
    (void)gr::skew_param_onb(params_.value(layer_bias_[i]));
  }
}

void GcnModel::save(const std::filesystem::path& dir) const { save_params(dir, params_); }
void GcnModel::load(const std::filesystem::path& dir) { load_params(dir, params_); }

}  // namespace gyromat::nn
