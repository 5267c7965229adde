#include "peelnet/rng.hpp"

#include <random>

namespace peelnet::rng {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t component : path) {
        s = splitmix64(s ^ splitmix64(component));
    }
    return s;
}

Vector uniform_weights(std::uint64_t seed, int k) {
    std::mt19937_64 gen(seed);
    Vector w(k);
    for (int i = 0; i < k; ++i) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
        w[i] = u - 0.5;
    }
    return w;
}

}  // namespace peelnet::rng
