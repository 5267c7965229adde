#pragma once

#include <cstdint>
#include <initializer_list>

#include "peelnet/linalg.hpp"

namespace peelnet::rng {

// All randomness in the project flows through these three functions. Their
// output is frozen: mt19937_64 is fully specified by the standard and the
// 53-bit mapping below is fixed, so identical seeds give identical weights
// on every platform and release.

/// splitmix64 step; the basis of seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Derive a sub-seed from a master seed and a path of components
/// (e.g. {phase, model, hidden, split, restart}). Each component is folded
/// in with one splitmix64 step.
std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// k initial weights, uniform in [-0.5, 0.5), drawn from mt19937_64 via the
/// standard 53-bit mantissa mapping (x >> 11) * 2^-53.
Vector uniform_weights(std::uint64_t seed, int k);

}  // namespace peelnet::rng
