#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "eclgsr/matrix.hpp"

namespace eclgsr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for a sub-task. Order of `parts` matters; the result does not
/// depend on any shared generator state, so work can be scheduled freely.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

/// Uniform draw in the open interval (0, 1) from a hashed key.
double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Matrix with i.i.d. Normal(0, stddev^2) entries.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

}  // namespace eclgsr
