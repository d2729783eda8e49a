#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "gyromat/linalg.hpp"

namespace gyromat {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);
// Seed of a named stream: splitmix64(root ^ fnv1a64(name)).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);
Rng make_rng(std::uint64_t root, std::string_view stream);

// Box-Muller normals; std::normal_distribution is implementation-defined.
double normal(Rng& rng);
double uniform01(Rng& rng);
Index uniform_index(Rng& rng, Index n);
Matrix normal_matrix(Rng& rng, Index rows, Index cols, double stddev = 1.0);
Matrix normal_sym(Rng& rng, Index n, double stddev = 1.0);
// Fisher-Yates with uniform_index.
void shuffle_indices(Rng& rng, std::vector<Index>& idx);

}  // namespace gyromat
