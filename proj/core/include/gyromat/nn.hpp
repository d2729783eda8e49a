#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gyromat/autodiff.hpp"
#include "gyromat/data.hpp"
#include "gyromat/gyro_spd.hpp"
#include "gyromat/optim.hpp"
#include "gyromat/rng.hpp"
#include "gyromat/spsd.hpp"

namespace gyromat::nn {

using ad::Tape;
using ad::Var;

// SPD parameter exp(sym(S)).
Var spd_param(Var s);

// lift(-P (+) X) for P = exp(sym(S)); per-parameter work is done once.
class Translation {
 public:
  Translation() = default;
  Translation(const spd::SpdMetric& g, Var s);
  // lift_x = spd::var::lift(g, x); ignored for AI.
  Var apply(Var x, Var lift_x) const;

 private:
  spd::SpdMetric g_;
  Var e_;       // AI: P^{-1/2}
  Var lift_p_;  // LE, LC
};

// lift(exp(sym(S))).
Var lift_of_param(const spd::SpdMetric& g, Var s);

struct ConvSpec {
  spd::SpdMetric metric{spd::Metric::AI, 0.0};
  Index n = 0;       // input matrix size
  Index m = 0;       // output matrix size
  Index window = 1;  // matrices per window; window = 1 is the FC layer
  Index stride = 1;
};

// P_(i,j) and W_(i,j) are block-diagonal over the window (one n x n block
// per position). Output: one m x m SPD matrix per window.
class SpdConvLayer {
 public:
  SpdConvLayer() = default;
  SpdConvLayer(const ConvSpec& spec, ParamStore& store, const std::string& prefix, Rng& rng);

  struct Prepared {
    std::vector<Translation> tr;  // [unit * window + b]
    std::vector<Var> lift_w;
  };

  const ConvSpec& spec() const { return spec_; }
  Index units() const { return static_cast<Index>(spd::upper_pairs(spec_.m).size()); }
  Index output_count(Index len) const;
  Prepared prepare(std::span<const Var> bound) const;
  std::vector<Var> forward(const Prepared& pre, std::span<const Var> seq) const;
  spd::FcParams fc_params(const ParamStore& store) const;

 private:
  ConvSpec spec_;
  std::vector<std::size_t> p_idx_, w_idx_;
};

// Logits are the signed numerators <lift(-P_c (+) X), lift_tangent(A_c)>.
class SpdMlrHead {
 public:
  SpdMlrHead() = default;
  SpdMlrHead(const spd::SpdMetric& g, Index q, int classes, ParamStore& store,
             const std::string& prefix, Rng& rng);

  struct Prepared {
    std::vector<Translation> tr;
    std::vector<Var> a;
  };

  Prepared prepare(std::span<const Var> bound) const;
  // C x 1.
  Var logits(const Prepared& pre, Var x) const;
  std::vector<spd::SpdHyperplane> hyperplanes(const ParamStore& store) const;
  const spd::SpdMetric& metric() const { return g_; }

 private:
  spd::SpdMetric g_;
  int classes_ = 0;
  std::vector<std::size_t> p_idx_, a_idx_;
};

// Structure-space head: top-p subspace, canonical alignment against the
// common subspace, then the signed numerators.
class SpsdMlrHead {
 public:
  SpsdMlrHead() = default;
  SpsdMlrHead(const spsd::SpsdConfig& cfg, Index m, Index p, int classes, ParamStore& store,
              const std::string& prefix, Rng& rng);

  std::vector<spsd::var::HyperplaneVars> prepare(std::span<const Var> bound) const;
  Var logits(const std::vector<spsd::var::HyperplaneVars>& pre, Var x, const Matrix& um) const;
  std::vector<spsd::SpsdHyperplane> hyperplanes(const ParamStore& store) const;
  const spsd::SpsdConfig& config() const { return cfg_; }
  Index rank() const { return p_; }

 private:
  spsd::SpsdConfig cfg_;
  Index m_ = 0, p_ = 0;
  int classes_ = 0;
  std::vector<std::size_t> up_idx_, sp_idx_, uw_idx_, sw_idx_;
};

struct SpdNetSpec {
  ConvSpec conv;
  Index seq_len = 1;
  int classes = 2;
  bool structure_head = false;
  spd::SpdMetric mlr_metric{spd::Metric::LE, 0.0};
  spsd::SpsdConfig spsd;
  Index rank = 0;  // p for the structure head
};

// Conv -> concat_spd of the window outputs -> MLR (SPD or structure space).
class SpdNet {
 public:
  SpdNet(const SpdNetSpec& spec, std::uint64_t seed);

  const SpdNetSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  spsd::CommonSubspaceState& state() { return state_; }
  const spsd::CommonSubspaceState& state() const { return state_; }

  // C x N logits. Training mode updates the common subspace first.
  Var batch_logits(Tape& t, std::span<const Var> bound,
                   const std::vector<const data::SpdSample*>& batch, bool training);
  Var pooled_features(Tape& t, const SpdConvLayer::Prepared& pre, const data::SpdSample& s) const;
  // Throws if a realised parameter leaves its manifold.
  void check_invariants() const;

  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

 private:
  SpdNetSpec spec_;
  ParamStore params_;
  SpdConvLayer conv_;
  SpdMlrHead spd_head_;
  SpsdMlrHead spsd_head_;
  spsd::CommonSubspaceState state_;
};

// Mean cross-entropy over the columns of a C x N logit matrix.
Var mean_cross_entropy(Var logits, const std::vector<int>& labels);
std::vector<int> argmax_columns(const Matrix& logits);

void save_params(const std::filesystem::path& dir, const ParamStore& store);
void load_params(const std::filesystem::path& dir, ParamStore& store);

}  // namespace gyromat::nn
