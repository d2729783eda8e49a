#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gyromat/linalg.hpp"

namespace gyromat::data {

// [[S + mu mu^T, mu], [mu^T, 1]].
SpdMatrix gaussian_embed(const Vector& mu, const SpdMatrix& sigma);
// det(S)^(-1/(n+k)) [[S + k mu mu^T, mu(k)], [mu(k)^T, I_k]].
SymMatrix beta_embed(const Vector& mu, const SpdMatrix& sigma, Index k);

// Lower triangle including the diagonal, column-major over i >= j.
Vector flatten_lower(const Matrix& y);

// A frame is a set of feature vectors (one per row), e.g. joints x coords.
using Frame = Matrix;
using TimeSeries = std::vector<Frame>;
using SpdSequence = std::vector<SpdMatrix>;

struct WindowOptions {
  Index window = 2;
  Index stride = 1;
  double eps_base = 1e-5;  // regulariser eps = eps_base * (1 + mean diagonal)
};

// Per frame: mean/covariance of the rows -> gaussian_embed -> log -> flatten.
// Per window: covariance of the flattened vectors + eps I.
SpdSequence windowed_spd(const TimeSeries& series, const WindowOptions& opt);
// levels = 2 appends the sequence at window max(2, c/2) to the one at window c.
SpdSequence windowed_spd_pyramid(const TimeSeries& series, const WindowOptions& opt, int levels);

struct SpdSample {
  SpdSequence seq;
  int label = 0;
};

struct SpdDataset {
  std::vector<SpdSample> train;
  std::vector<SpdSample> test;
  int classes = 0;
};

struct SynthSpdOptions {
  int classes = 3;
  int per_class = 100;
  Index n = 8;
  double sigma = 0.1;
  std::uint64_t seed = 42;
};

// Class-major list: prototype exp(A_c), sample exp(A_c + sigma N).
std::vector<SpdSample> synth_spd_classes(const SynthSpdOptions& opt);
std::vector<SpdMatrix> synth_spd_prototypes(const SynthSpdOptions& opt);
// Seeded shuffle then split into the first n_train and the rest.
SpdDataset split_dataset(std::vector<SpdSample> all, std::size_t n_train, int classes,
                         std::uint64_t seed);

struct Graph {
  Index nodes = 0;
  std::vector<std::vector<Index>> adj;  // sorted, self-loop included
  Matrix features;                       // nodes x d
  std::vector<int> labels;
  std::vector<Index> train, dev, test;
  int classes = 0;

  Index degree(Index i) const { return static_cast<Index>(adj[static_cast<std::size_t>(i)].size()); }
  bool has_edge(Index i, Index j) const;
};

struct SbmOptions {
  Index nodes = 100;
  int communities = 3;
  double p_in = 0.3;
  double p_out = 0.02;
  Index feature_dim = 3;
  double feature_noise = 1.0;
  std::uint64_t seed = 7;
};

Graph synth_sbm_graph(const SbmOptions& opt);
// Scales every nonzero feature row to unit Euclidean norm.
void normalize_feature_rows(Graph& g);

// 70/15/15 split of node ids after a seeded shuffle.
void split_nodes(Graph& g, std::uint64_t seed);

// Edge file: "src\tdst" per line. Features: CSV row per node. Labels: "node,label"
// per line, optional header. Self-loops are added; duplicate edges collapse.
Graph load_graph(const std::filesystem::path& edges, const std::filesystem::path& features,
                 const std::filesystem::path& labels, std::uint64_t split_seed);
void write_graph(const Graph& g, const std::filesystem::path& edges,
                 const std::filesystem::path& features, const std::filesystem::path& labels);

// Directory with manifest.csv ("file,label" per line, header "file,label") and
// one CSV per sample holding its L matrices stacked vertically.
void write_sequences(const std::filesystem::path& dir, const std::vector<SpdSample>& samples);
std::vector<SpdSample> read_sequences(const std::filesystem::path& dir);

struct LabeledSeries {
  TimeSeries series;
  int label = 0;
};

// Same manifest layout; each CSV row is one frame of frame_rows x k values
// stored row-major, so the row length must be a multiple of frame_rows.
std::vector<LabeledSeries> read_timeseries(const std::filesystem::path& dir, Index frame_rows);

}  // namespace gyromat::data
