#include "gyromat/rng.hpp"

#include <cmath>
#include <numbers>

namespace gyromat {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  return splitmix64(root ^ fnv1a64(stream));
}

Rng make_rng(std::uint64_t root, std::string_view stream) { return Rng(derive_seed(root, stream)); }

double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Index uniform_index(Rng& rng, Index n) {
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return static_cast<Index>(r % un);
}

Matrix normal_matrix(Rng& rng, Index rows, Index cols, double stddev) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = stddev * normal(rng);
  return m;
}

Matrix normal_sym(Rng& rng, Index n, double stddev) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) m(i, j) = m(j, i) = stddev * normal(rng);
  return m;
}

void shuffle_indices(Rng& rng, std::vector<Index>& idx) {
  for (Index i = static_cast<Index>(idx.size()) - 1; i > 0; --i) {
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
  }
}

}  // namespace gyromat
