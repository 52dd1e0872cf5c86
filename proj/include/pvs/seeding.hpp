#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace pvs {

/// Engine used everywhere randomness is needed.
using Rng = std::mt19937_64;

/// Derives an independent child seed from a parent seed and a stage label.
/// Adding a new label never perturbs the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index);

// The std:: distributions are implementation-defined; these are not, so
// a seed reproduces the same stream with any standard library.

/// Uniform double in [0, 1).
double uniform01(Rng& rng);
/// Uniform integer in [0, bound). bound must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);
/// Fisher-Yates in place.
void shuffle(std::span<std::size_t> values, Rng& rng);
/// Random permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace pvs
