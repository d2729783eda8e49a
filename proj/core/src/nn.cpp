#include "gyromat/nn.hpp"

#include <cmath>
#include <fstream>

#include "gyromat/csv.hpp"
#include "gyromat/grassmann.hpp"

namespace gyromat::nn {

Var spd_param(Var s) { return ad::spd_fn(ad::sym(s), MatFn::Exp); }

Translation::Translation(const spd::SpdMetric& g, Var s) : g_(g) {
  if (g.tag == spd::Metric::AI) {
    e_ = ad::spd_fn(-0.5 * ad::sym(s), MatFn::Exp);
  } else {
    lift_p_ = lift_of_param(g, s);
  }
}

Var Translation::apply(Var x, Var lift_x) const {
  // LE and LC are translations in lift coordinates.
  if (g_.tag != spd::Metric::AI) return lift_x - lift_p_;
  return ad::spd_fn(e_ * x * e_, MatFn::Log);
}

Var lift_of_param(const spd::SpdMetric& g, Var s) {
  if (g.tag == spd::Metric::LC) return spd::var::lift(g, spd_param(s));
  return ad::sym(s);
}

namespace {

std::string key(const std::string& prefix, const std::string& what, std::size_t k) {
  return prefix + "." + what + "." + std::to_string(k);
}

}  // namespace

SpdConvLayer::SpdConvLayer(const ConvSpec& spec, ParamStore& store, const std::string& prefix,
                           Rng& rng)
    : spec_(spec) {
  if (spec.n < 1 || spec.m < 1) throw ConfigError("conv: n and m must be >= 1");
  if (spec.window < 1 || spec.stride < 1) throw ConfigError("conv: window and stride must be >= 1");
  spd::validate(spec.metric, spec.m);
  const std::size_t blocks = static_cast<std::size_t>(units() * spec.window);
  // Unit values start at O(1) for inputs whose logs have O(1) entries.
  const double sd = 0.5 / (static_cast<double>(spec.n) * std::sqrt(static_cast<double>(spec.window)));
  for (std::size_t k = 0; k < blocks; ++k) {
    p_idx_.push_back(store.add(key(prefix, "p", k), Matrix::Zero(spec.n, spec.n)));
    w_idx_.push_back(store.add(key(prefix, "w", k), normal_sym(rng, spec.n, sd)));
  }
}

Index SpdConvLayer::output_count(Index len) const {
  return spd::conv_output_count(len, spec_.window, spec_.stride);
}

SpdConvLayer::Prepared SpdConvLayer::prepare(std::span<const Var> bound) const {
  Prepared pre;
  for (std::size_t k = 0; k < p_idx_.size(); ++k) {
    pre.tr.emplace_back(spec_.metric, bound[p_idx_[k]]);
    pre.lift_w.push_back(lift_of_param(spec_.metric, bound[w_idx_[k]]));
  }
  return pre;
}

std::vector<Var> SpdConvLayer::forward(const Prepared& pre, std::span<const Var> seq) const {
  const Index count = output_count(static_cast<Index>(seq.size()));
  const bool ai = spec_.metric.tag == spd::Metric::AI;
  std::vector<Var> lifts;
  for (const Var& x : seq) {
    if (x.rows() != spec_.n) throw ArgumentError("conv: input size mismatch");
    lifts.push_back(ai ? x : spd::var::lift(spec_.metric, x));
  }
  const auto w = static_cast<std::size_t>(spec_.window);
  std::vector<Var> out;
  for (Index t = 0; t < count; ++t) {
    const auto first = static_cast<std::size_t>(t * spec_.stride);
    std::vector<Var> v;
    for (Index k = 0; k < units(); ++k) {
      Var acc;
      for (std::size_t b = 0; b < w; ++b) {
        const std::size_t j = static_cast<std::size_t>(k) * w + b;
        Var term = ad::dot(pre.tr[j].apply(seq[first + b], lifts[first + b]), pre.lift_w[j]);
        acc = acc.valid() ? acc + term : term;
      }
      v.push_back(acc);
    }
    out.push_back(spd::var::fc_assemble(spec_.metric, spec_.m, v));
  }
  return out;
}

spd::FcParams SpdConvLayer::fc_params(const ParamStore& store) const {
  spd::FcParams fp;
  const auto w = static_cast<std::size_t>(spec_.window);
  for (Index k = 0; k < units(); ++k) {
    std::vector<SpdMatrix> pb, wb;
    for (std::size_t b = 0; b < w; ++b) {
      const std::size_t j = static_cast<std::size_t>(k) * w + b;
      pb.push_back(spd_exp(SymMatrix(store.value(p_idx_[j]))));
      wb.push_back(spd_exp(SymMatrix(store.value(w_idx_[j]))));
    }
    fp.p.push_back(concat_spd(pb));
    fp.w.push_back(concat_spd(wb));
  }
  return fp;
}

SpdMlrHead::SpdMlrHead(const spd::SpdMetric& g, Index q, int classes, ParamStore& store,
                       const std::string& prefix, Rng& rng)
    : g_(g), classes_(classes) {
  if (classes < 2) throw ConfigError("MLR head needs at least 2 classes");
  if (g.tag == spd::Metric::AI && g.beta != 0.0) {
    throw ConfigError("MLR head: AI metric is supported with beta = 0 only");
  }
  const double sd = 1.0 / std::sqrt(static_cast<double>(q));
  for (int c = 0; c < classes; ++c) {
    const auto k = static_cast<std::size_t>(c);
    p_idx_.push_back(store.add(key(prefix, "p", k), Matrix::Zero(q, q)));
    Matrix a = normal_sym(rng, q, sd);
    if (spd::lift_tangent(g, a).norm() == 0.0) {
      throw ConfigError("MLR head: degenerate normal for class " + std::to_string(c));
    }
    a_idx_.push_back(store.add(key(prefix, "a", k), a));
  }
}

SpdMlrHead::Prepared SpdMlrHead::prepare(std::span<const Var> bound) const {
  Prepared pre;
  for (std::size_t c = 0; c < p_idx_.size(); ++c) {
    pre.tr.emplace_back(g_, bound[p_idx_[c]]);
    Var a = ad::sym(bound[a_idx_[c]]);
    pre.a.push_back(g_.tag == spd::Metric::LC ? ad::half_lower(a) : a);
  }
  return pre;
}

Var SpdMlrHead::logits(const Prepared& pre, Var x) const {
  Var lx = g_.tag == spd::Metric::AI ? x : spd::var::lift(g_, x);
  std::vector<Var> rows;
  for (std::size_t c = 0; c < pre.tr.size(); ++c) rows.push_back(ad::dot(pre.tr[c].apply(x, lx), pre.a[c]));
  return ad::vcat(rows);
}

std::vector<spd::SpdHyperplane> SpdMlrHead::hyperplanes(const ParamStore& store) const {
  std::vector<spd::SpdHyperplane> out;
  for (std::size_t c = 0; c < p_idx_.size(); ++c) {
    out.push_back({spd_exp(SymMatrix(store.value(p_idx_[c]))), SymMatrix(store.value(a_idx_[c]))});
  }
  return out;
}

SpsdMlrHead::SpsdMlrHead(const spsd::SpsdConfig& cfg, Index m, Index p, int classes,
                         ParamStore& store, const std::string& prefix, Rng& rng)
    : cfg_(cfg), m_(m), p_(p), classes_(classes) {
  if (classes < 2) throw ConfigError("MLR head needs at least 2 classes");
  if (p < 1 || p >= m) throw ConfigError("structure head: need 1 <= p < m");
  spsd::validate(cfg, p);
  for (int c = 0; c < classes; ++c) {
    const auto k = static_cast<std::size_t>(c);
    up_idx_.push_back(store.add(key(prefix, "up", k), Matrix::Zero(p, m - p)));
    sp_idx_.push_back(store.add(key(prefix, "sp", k), Matrix::Zero(p, p)));
    uw_idx_.push_back(store.add(key(prefix, "uw", k), normal_matrix(rng, p, m - p, 0.1)));
    Matrix sw = normal_sym(rng, p, 1.0 / std::sqrt(static_cast<double>(p)));
    sw_idx_.push_back(store.add(key(prefix, "sw", k), sw));
  }
  for (const auto& h : hyperplanes(store)) {
    if (spsd::psd_normal_norm(cfg_, h) < 1e-12) throw ConfigError("structure head: degenerate normal");
  }
}

std::vector<spsd::var::HyperplaneVars> SpsdMlrHead::prepare(std::span<const Var> bound) const {
  std::vector<spsd::var::HyperplaneVars> out;
  for (std::size_t c = 0; c < up_idx_.size(); ++c) {
    out.push_back({gr::var::skew_param_onb(bound[up_idx_[c]]), spd_param(bound[sp_idx_[c]]),
                   gr::var::skew_param_onb(bound[uw_idx_[c]]), spd_param(bound[sw_idx_[c]])});
  }
  return out;
}

Var SpsdMlrHead::logits(const std::vector<spsd::var::HyperplaneVars>& pre, Var x,
                        const Matrix& um) const {
  spsd::var::StructureVars s = spsd::var::canonicalize(x, spsd::var::decompose(x, p_), um);
  std::vector<Var> rows;
  for (const auto& h : pre) rows.push_back(spsd::var::signed_numerator(cfg_, s, h));
  return ad::vcat(rows);
}

std::vector<spsd::SpsdHyperplane> SpsdMlrHead::hyperplanes(const ParamStore& store) const {
  std::vector<spsd::SpsdHyperplane> out;
  for (std::size_t c = 0; c < up_idx_.size(); ++c) {
    spsd::StructurePoint p(gr::skew_param_onb(store.value(up_idx_[c])),
                           spd_exp(SymMatrix(store.value(sp_idx_[c]))));
    spsd::StructurePoint w(gr::skew_param_onb(store.value(uw_idx_[c])),
                           spd_exp(SymMatrix(store.value(sw_idx_[c]))));
    out.push_back({p, w});
  }
  return out;
}

SpdNet::SpdNet(const SpdNetSpec& spec, std::uint64_t seed) : spec_(spec) {
  Rng rng = make_rng(seed, "init");
  conv_ = SpdConvLayer(spec.conv, params_, "conv", rng);
  const Index q = spec.conv.m * conv_.output_count(spec.seq_len);
  if (spec.structure_head) {
    spsd_head_ = SpsdMlrHead(spec.spsd, q, spec.rank, spec.classes, params_, "mlr", rng);
    state_ = spsd::CommonSubspaceState(q, spec.rank);
  } else {
    spd_head_ = SpdMlrHead(spec.mlr_metric, q, spec.classes, params_, "mlr", rng);
  }
}

Var SpdNet::pooled_features(Tape& t, const SpdConvLayer::Prepared& pre,
                            const data::SpdSample& s) const {
  if (static_cast<Index>(s.seq.size()) != spec_.seq_len) {
    throw ArgumentError("SpdNet: sequence length " + std::to_string(s.seq.size()) + ", expected " +
                        std::to_string(spec_.seq_len));
  }
  std::vector<Var> seq;
  for (const SpdMatrix& x : s.seq) seq.push_back(t.constant(x.matrix()));
  std::vector<Var> outs = conv_.forward(pre, seq);
  return outs.size() == 1 ? outs.front() : ad::block_diag(outs);
}

Var SpdNet::batch_logits(Tape& t, std::span<const Var> bound,
                         const std::vector<const data::SpdSample*>& batch, bool training) {
  SpdConvLayer::Prepared cp = conv_.prepare(bound);
  std::vector<Var> feats;
  for (const data::SpdSample* s : batch) feats.push_back(pooled_features(t, cp, *s));
  std::vector<Var> cols;
  if (spec_.structure_head) {
    if (training) {
      std::vector<gr::OnbPoint> us;
      for (const Var& f : feats) us.push_back(spsd::spsd_decompose(SymMatrix(f.value()), spec_.rank).u);
      state_.update(us, spec_.spsd.gamma);
    }
    auto hp = spsd_head_.prepare(bound);
    for (const Var& f : feats) cols.push_back(spsd_head_.logits(hp, f, state_.um().matrix()));
  } else {
    auto hp = spd_head_.prepare(bound);
    for (const Var& f : feats) cols.push_back(spd_head_.logits(hp, f));
  }
  return ad::hcat(cols);
}

void SpdNet::check_invariants() const {
  if (!params_.all_finite()) throw NumericalError("SpdNet: non-finite parameter");
  spd::FcParams fp = conv_.fc_params(params_);
  (void)fp;
  if (spec_.structure_head) {
    for (const auto& h : spsd_head_.hyperplanes(params_)) (void)h;
    (void)gr::OnbPoint(state_.um().matrix());
  } else {
    for (const auto& h : spd_head_.hyperplanes(params_)) (void)h;
  }
}

void SpdNet::save(const std::filesystem::path& dir) const {
  save_params(dir, params_);
  if (spec_.structure_head) {
    write_csv_matrix(dir / "state_um.csv", state_.um().matrix());
    KeyValues kv{{"n", std::to_string(state_.um().n())},
                 {"p", std::to_string(state_.um().p())},
                 {"lambda", format_double(spec_.spsd.lambda)},
                 {"gamma", format_double(spec_.spsd.gamma)},
                 {"metric", std::string(spd::to_string(spec_.spsd.spd_metric.tag))}};
    write_key_values(dir / "state_manifest.txt", kv);
  }
}

void SpdNet::load(const std::filesystem::path& dir) {
  load_params(dir, params_);
  if (spec_.structure_head) state_ = spsd::CommonSubspaceState(gr::OnbPoint(read_csv_matrix(dir / "state_um.csv")));
}

Var mean_cross_entropy(Var logits, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != logits.cols()) {
    throw ArgumentError("mean_cross_entropy: label count mismatch");
  }
  Var total;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Var l = ad::cross_entropy(ad::block(logits, 0, static_cast<Index>(i), logits.rows(), 1), labels[i]);
    total = total.valid() ? total + l : l;
  }
  return (1.0 / static_cast<double>(labels.size())) * total;
}

std::vector<int> argmax_columns(const Matrix& logits) {
  std::vector<int> out;
  for (Index j = 0; j < logits.cols(); ++j) {
    Index r = 0;
    logits.col(j).maxCoeff(&r);
    out.push_back(static_cast<int>(r));
  }
  return out;
}

void save_params(const std::filesystem::path& dir, const ParamStore& store) {
  std::filesystem::create_directories(dir);
  std::ofstream man(dir / "params.csv");
  man << "name,file,rows,cols\n";
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::string file = "param_" + std::to_string(i) + ".csv";
    write_csv_matrix(dir / file, store.value(i));
    man << store.name(i) << ',' << file << ',' << store.value(i).rows() << ','
        << store.value(i).cols() << '\n';
  }
  if (!man) throw Error("save_params: write failed");
}

void load_params(const std::filesystem::path& dir, ParamStore& store) {
  std::ifstream man(dir / "params.csv");
  if (!man) throw Error("load_params: cannot open " + (dir / "params.csv").string());
  std::string line;
  std::size_t ln = 0, seen = 0;
  while (std::getline(man, line)) {
    ++ln;
    if (ln == 1 || trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
      f.push_back(line.substr(start, pos - start));
    }
    f.push_back(line.substr(start));
    if (f.size() != 4) throw ParseError("params manifest row needs 4 fields", ln);
    const std::size_t i = store.find(f[0]);
    if (i == store.size()) throw ParseError("unknown parameter '" + f[0] + "'", ln);
    Matrix v = read_csv_matrix(dir / trim(f[1]));
    if (v.rows() != store.value(i).rows() || v.cols() != store.value(i).cols()) {
      throw ParseError("shape mismatch for parameter '" + f[0] + "'", ln);
    }
    store.value(i) = v;
    ++seen;
  }
  if (seen != store.size()) throw Error("load_params: checkpoint has " + std::to_string(seen) +
                                        " of " + std::to_string(store.size()) + " parameters");
}

}  // namespace gyromat::nn
