#include "gyromat/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "gyromat/csv.hpp"
#include "gyromat/rng.hpp"

namespace gyromat::data {

SpdMatrix gaussian_embed(const Vector& mu, const SpdMatrix& sigma) {
  const Index d = sigma.size();
  if (mu.size() != d) throw ArgumentError("gaussian_embed: mean/covariance size mismatch");
  require_finite(mu, "gaussian_embed");
  Matrix y(d + 1, d + 1);
  y.topLeftCorner(d, d) = sigma.matrix() + mu * mu.transpose();
  y.topRightCorner(d, 1) = mu;
  y.bottomLeftCorner(1, d) = mu.transpose();
  y(d, d) = 1.0;
  return SpdMatrix(y);
}

SymMatrix beta_embed(const Vector& mu, const SpdMatrix& sigma, Index k) {
  const Index n = sigma.size();
  if (mu.size() != n) throw ArgumentError("beta_embed: mean/covariance size mismatch");
  if (k < 1) throw ArgumentError("beta_embed: k must be >= 1");
  const double det = sigma.matrix().determinant();
  const double scale = std::pow(det, -1.0 / static_cast<double>(n + k));
  Matrix y(n + k, n + k);
  y.topLeftCorner(n, n) = sigma.matrix() + static_cast<double>(k) * mu * mu.transpose();
  Matrix muk = mu.replicate(1, k);
  y.topRightCorner(n, k) = muk;
  y.bottomLeftCorner(k, n) = muk.transpose();
  y.bottomRightCorner(k, k).setIdentity();
  return SymMatrix(Matrix(scale * y));
}

Vector flatten_lower(const Matrix& y) {
  const Index n = y.rows();
  Vector v(n * (n + 1) / 2);
  Index k = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) v(k++) = y(i, j);
  return v;
}

namespace {

Matrix covariance_rows(const Matrix& rows, Vector& mean) {
  mean = rows.colwise().mean().transpose();
  const Matrix c = rows.rowwise() - mean.transpose();
  return (c.transpose() * c) / static_cast<double>(rows.rows());
}

Matrix regularize(const Matrix& z, double eps_base) {
  const double eps = eps_base * (1.0 + z.diagonal().mean());
  return z + eps * Matrix::Identity(z.rows(), z.cols());
}

}  // namespace

SpdSequence windowed_spd(const TimeSeries& series, const WindowOptions& opt) {
  if (opt.window < 2) throw ArgumentError("windowed_spd: window must be >= 2");
  if (opt.stride < 1) throw ArgumentError("windowed_spd: stride must be >= 1");
  const Index t_len = static_cast<Index>(series.size());
  if (t_len < opt.window) throw ArgumentError("windowed_spd: series shorter than window");
  std::vector<Vector> v;
  v.reserve(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    const Frame& f = series[t];
    if (!f.allFinite()) throw DomainError("windowed_spd: non-finite value in frame " + std::to_string(t));
    Vector mu;
    Matrix cov = regularize(covariance_rows(f, mu), opt.eps_base);
    SpdMatrix y = gaussian_embed(mu, SpdMatrix(cov));
    v.push_back(flatten_lower(spd_log(y).matrix()));
  }
  SpdSequence out;
  for (Index t = 0; t + opt.window <= t_len; t += opt.stride) {
    Matrix rows(opt.window, v.front().size());
    for (Index i = 0; i < opt.window; ++i) rows.row(i) = v[static_cast<std::size_t>(t + i)].transpose();
    Vector mean;
    out.emplace_back(regularize(covariance_rows(rows, mean), opt.eps_base));
  }
  return out;
}

SpdSequence windowed_spd_pyramid(const TimeSeries& series, const WindowOptions& opt, int levels) {
  if (levels < 1 || levels > 2) throw ArgumentError("windowed_spd_pyramid: levels must be 1 or 2");
  SpdSequence out = windowed_spd(series, opt);
  if (levels == 2) {
    WindowOptions half = opt;
    half.window = std::max<Index>(2, opt.window / 2);
    SpdSequence fine = windowed_spd(series, half);
    out.insert(out.end(), fine.begin(), fine.end());
  }
  return out;
}

std::vector<SpdMatrix> synth_spd_prototypes(const SynthSpdOptions& opt) {
  Rng rng = make_rng(opt.seed, "data");
  std::vector<SpdMatrix> out;
  for (int c = 0; c < opt.classes; ++c) out.push_back(spd_exp(SymMatrix(normal_sym(rng, opt.n))));
  return out;
}

std::vector<SpdSample> synth_spd_classes(const SynthSpdOptions& opt) {
  if (opt.classes < 1 || opt.per_class < 1 || opt.n < 1) {
    throw ArgumentError("synth_spd_classes: sizes must be positive");
  }
  Rng rng = make_rng(opt.seed, "data");
  std::vector<Matrix> protos;
  for (int c = 0; c < opt.classes; ++c) protos.push_back(normal_sym(rng, opt.n));
  std::vector<SpdSample> out;
  for (int c = 0; c < opt.classes; ++c) {
    for (int i = 0; i < opt.per_class; ++i) {
      Matrix a = protos[static_cast<std::size_t>(c)] + opt.sigma * normal_sym(rng, opt.n);
      out.push_back({{spd_exp(SymMatrix(a))}, c});
    }
  }
  return out;
}

SpdDataset split_dataset(std::vector<SpdSample> all, std::size_t n_train, int classes,
                         std::uint64_t seed) {
  if (n_train > all.size()) throw ArgumentError("split_dataset: n_train exceeds dataset size");
  Rng rng = make_rng(seed, "split");
  std::vector<Index> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Index>(i);
  shuffle_indices(rng, idx);
  SpdDataset d;
  d.classes = classes;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& dst = i < n_train ? d.train : d.test;
    dst.push_back(std::move(all[static_cast<std::size_t>(idx[i])]));
  }
  return d;
}

bool Graph::has_edge(Index i, Index j) const {
  const auto& a = adj[static_cast<std::size_t>(i)];
  return std::binary_search(a.begin(), a.end(), j);
}

namespace {

void finalize_adjacency(Graph& g, const std::set<std::pair<Index, Index>>& edges) {
  g.adj.assign(static_cast<std::size_t>(g.nodes), {});
  for (Index i = 0; i < g.nodes; ++i) g.adj[static_cast<std::size_t>(i)].push_back(i);
  for (const auto& [a, b] : edges) {
    if (a == b) continue;
    g.adj[static_cast<std::size_t>(a)].push_back(b);
    g.adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& a : g.adj) std::sort(a.begin(), a.end());
}

}  // namespace

void normalize_feature_rows(Graph& g) {
  for (Index i = 0; i < g.features.rows(); ++i) {
    const double r = g.features.row(i).norm();
    if (r > 0.0) g.features.row(i) /= r;
  }
}

void split_nodes(Graph& g, std::uint64_t seed) {
  Rng rng = make_rng(seed, "split");
  std::vector<Index> idx(static_cast<std::size_t>(g.nodes));
  for (Index i = 0; i < g.nodes; ++i) idx[static_cast<std::size_t>(i)] = i;
  shuffle_indices(rng, idx);
  const auto n = static_cast<std::size_t>(g.nodes);
  const std::size_t n_train = (n * 70 + 50) / 100;
  const std::size_t n_dev = (n * 15 + 50) / 100;
  g.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  g.dev.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  g.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), idx.end());
  for (auto* part : {&g.train, &g.dev, &g.test}) std::sort(part->begin(), part->end());
}

Graph synth_sbm_graph(const SbmOptions& opt) {
  if (opt.communities < 1 || opt.nodes < 1) throw ArgumentError("synth_sbm_graph: sizes must be positive");
  if (!(opt.p_in > opt.p_out)) throw ArgumentError("synth_sbm_graph: need p_in > p_out");
  if (opt.feature_dim < opt.communities) {
    throw ArgumentError("synth_sbm_graph: feature_dim must be >= communities");
  }
  Rng rng = make_rng(opt.seed, "data");
  Graph g;
  g.nodes = opt.nodes;
  g.classes = opt.communities;
  g.labels.resize(static_cast<std::size_t>(opt.nodes));
  for (Index i = 0; i < opt.nodes; ++i) g.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % opt.communities);
  std::set<std::pair<Index, Index>> edges;
  for (Index i = 0; i < opt.nodes; ++i) {
    for (Index j = i + 1; j < opt.nodes; ++j) {
      const bool same = g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)];
      if (uniform01(rng) < (same ? opt.p_in : opt.p_out)) edges.insert({i, j});
    }
  }
  finalize_adjacency(g, edges);
  g.features = opt.feature_noise * normal_matrix(rng, opt.nodes, opt.feature_dim);
  for (Index i = 0; i < opt.nodes; ++i) g.features(i, g.labels[static_cast<std::size_t>(i)]) += 1.0;
  split_nodes(g, opt.seed);
  return g;
}

namespace {

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open '" + p.string() + "'");
  return in;
}

Index parse_id(const std::string& s, std::size_t line, Index nodes) {
  const double d = parse_double(trim(s), line);
  if (d != std::floor(d) || d < 0) throw ParseError("node id '" + s + "' is not a non-negative integer", line);
  const auto id = static_cast<Index>(d);
  if (id >= nodes) throw ParseError("unknown node id " + std::to_string(id), line);
  return id;
}

}  // namespace

Graph load_graph(const std::filesystem::path& edges, const std::filesystem::path& features,
                 const std::filesystem::path& labels, std::uint64_t split_seed) {
  Graph g;
  g.features = read_csv_matrix(features);
  g.nodes = g.features.rows();
  if (g.nodes == 0) throw ParseError("feature file has no rows", 1);

  std::ifstream lin = open_in(labels);
  std::vector<int> lab(static_cast<std::size_t>(g.nodes), -1);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(lin, line)) {
    ++ln;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (ln == 1 && t == "node,label") continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw ParseError("label row must be 'node,label'", ln);
    }
    const Index id = parse_id(t.substr(0, comma), ln, g.nodes);
    const double l = parse_double(trim(t.substr(comma + 1)), ln);
    if (l != std::floor(l) || l < 0) throw ParseError("label must be a non-negative integer", ln);
    if (lab[static_cast<std::size_t>(id)] != -1) throw ParseError("duplicate label for node " + std::to_string(id), ln);
    lab[static_cast<std::size_t>(id)] = static_cast<int>(l);
  }
  for (Index i = 0; i < g.nodes; ++i) {
    if (lab[static_cast<std::size_t>(i)] < 0) throw ParseError("missing label for node " + std::to_string(i), ln + 1);
  }
  g.labels = lab;
  g.classes = *std::max_element(lab.begin(), lab.end()) + 1;

  std::ifstream ein = open_in(edges);
  std::set<std::pair<Index, Index>> es;
  ln = 0;
  while (std::getline(ein, line)) {
    ++ln;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos || t.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("edge row must be 'src<TAB>dst'", ln);
    }
    Index a = parse_id(t.substr(0, tab), ln, g.nodes);
    Index b = parse_id(t.substr(tab + 1), ln, g.nodes);
    if (a > b) std::swap(a, b);
    es.insert({a, b});
  }
  finalize_adjacency(g, es);
  split_nodes(g, split_seed);
  return g;
}

void write_graph(const Graph& g, const std::filesystem::path& edges,
                 const std::filesystem::path& features, const std::filesystem::path& labels) {
  std::ofstream eo(edges);
  for (Index i = 0; i < g.nodes; ++i)
    for (Index j : g.adj[static_cast<std::size_t>(i)])
      if (j > i) eo << i << '\t' << j << '\n';
  write_csv_matrix(features, g.features);
  std::ofstream lo(labels);
  lo << "node,label\n";
  for (Index i = 0; i < g.nodes; ++i) lo << i << ',' << g.labels[static_cast<std::size_t>(i)] << '\n';
  if (!eo || !lo) throw Error("write_graph: write failed");
}

void write_sequences(const std::filesystem::path& dir, const std::vector<SpdSample>& samples) {
  std::filesystem::create_directories(dir);
  std::ofstream man(dir / "manifest.csv");
  man << "file,label\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string name = "seq_" + std::to_string(i) + ".csv";
    std::vector<Matrix> ms;
    for (const SpdMatrix& s : samples[i].seq) ms.push_back(s.matrix());
    Index rows = 0;
    for (const Matrix& m : ms) rows += m.rows();
    Matrix stacked(rows, ms.front().cols());
    Index r = 0;
    for (const Matrix& m : ms) {
      stacked.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
    write_csv_matrix(dir / name, stacked);
    man << name << ',' << samples[i].label << '\n';
  }
  if (!man) throw Error("write_sequences: write failed");
}

namespace {

std::vector<std::pair<std::string, int>> read_manifest(const std::filesystem::path& dir) {
  std::ifstream man = open_in(dir / "manifest.csv");
  std::vector<std::pair<std::string, int>> out;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(man, line)) {
    ++ln;
    const std::string t = trim(line);
    if (t.empty() || (ln == 1 && t == "file,label")) continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos) throw ParseError("manifest row must be 'file,label'", ln);
    const double l = parse_double(trim(t.substr(comma + 1)), ln);
    if (l != std::floor(l) || l < 0) throw ParseError("label must be a non-negative integer", ln);
    out.emplace_back(trim(t.substr(0, comma)), static_cast<int>(l));
  }
  return out;
}

}  // namespace

std::vector<SpdSample> read_sequences(const std::filesystem::path& dir) {
  std::vector<SpdSample> out;
  for (const auto& [file, label] : read_manifest(dir)) {
    Matrix stacked = read_csv_matrix(dir / file);
    const Index n = stacked.cols();
    if (n == 0 || stacked.rows() % n != 0) {
      throw ParseError("'" + file + "' does not hold a stack of square matrices", 1);
    }
    SpdSample s;
    s.label = label;
    for (Index r = 0; r < stacked.rows(); r += n) s.seq.emplace_back(Matrix(stacked.middleRows(r, n)));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSeries> read_timeseries(const std::filesystem::path& dir, Index frame_rows) {
  if (frame_rows < 1) throw ArgumentError("read_timeseries: frame_rows must be >= 1");
  std::vector<LabeledSeries> out;
  for (const auto& [file, label] : read_manifest(dir)) {
    const Matrix rows = read_csv_matrix(dir / file);
    if (rows.cols() % frame_rows != 0) {
      throw ParseError("'" + file + "': row length " + std::to_string(rows.cols()) +
                       " is not a multiple of frame_rows", 1);
    }
    const Index k = rows.cols() / frame_rows;
    LabeledSeries s;
    s.label = label;
    for (Index t = 0; t < rows.rows(); ++t) {
      Frame f(frame_rows, k);
      for (Index r = 0; r < frame_rows; ++r) f.row(r) = rows.block(t, r * k, 1, k);
      s.series.push_back(std::move(f));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gyromat::data
