#pragma once

#include <cstdint>
#include <random>

namespace privkey {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of trial `index` under a root seed; independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64(root ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(splitmix64(seed)) {}
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
};

}  // namespace privkey
