#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gyromat/autodiff.hpp"
#include "gyromat/data.hpp"
#include "gyromat/optim.hpp"

namespace gyromat::nn {

enum class GrPerspective { Projector, Onb };

struct GcnSpec {
  GrPerspective perspective = GrPerspective::Projector;
  Index n = 4;
  Index p = 2;
  Index feature_dim = 3;
  int classes = 3;
  int layers = 2;
};

// (|N(i)| |N(j)|)^(-1/2), neighbourhoods include the node itself.
double gcn_coefficient(const data::Graph& g, Index i, Index j);

// Node embedding on Gr(n, p) -> graph layers -> affine head on Log_I.
class GcnModel {
 public:
  GcnModel(const GcnSpec& spec, std::uint64_t seed);

  const GcnSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // One point per node: n x n projectors or n x p ONB matrices.
  std::vector<ad::Var> embed(std::span<const ad::Var> bound, const Matrix& features) const;
  std::vector<ad::Var> layer(std::span<const ad::Var> bound, int l, const data::Graph& g,
                             const std::vector<ad::Var>& xs) const;
  // C x nodes.
  ad::Var head(std::span<const ad::Var> bound, const std::vector<ad::Var>& xs) const;
  ad::Var logits(std::span<const ad::Var> bound, const data::Graph& g) const;

  void check_invariants() const;
  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

 private:
  ad::Var point(ad::Var b) const;
  ad::Var log_identity(ad::Var x) const;
  // Cut-locus errors name the node.
  ad::Var node_log(std::size_t node, ad::Var x) const;
  ad::Var act(ad::Var e, ad::Var x) const;

  GcnSpec spec_;
  ParamStore params_;
  std::size_t embed_w_ = 0, embed_b_ = 0, head_w_ = 0, head_b_ = 0;
  std::vector<std::size_t> layer_m_, layer_bias_;
};

}  // namespace gyromat::nn
