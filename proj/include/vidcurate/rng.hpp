#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vidcurate {

// std::mt19937_64 output is fully specified by the standard, but the standard
// distributions are not. Everything seeded goes through these helpers so a
// seed reproduces the same draws with any standard library.
using Engine = std::mt19937_64;

// Uniform integer in [0, n) by rejection (Lemire's nearly-divisionless method).
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
    if (n <= 1) {
        return 0;
    }
    std::uint64_t x = eng();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = eng();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

// Uniform real in [0, 1) with 53 random bits.
inline double uniform_unit(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// k distinct indices drawn uniformly from [0, n), returned in ascending order.
inline std::vector<std::size_t> sample_without_replacement(Engine& eng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) {
        pool[i] = i;
    }
    if (k > n) {
        k = n;
    }
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(eng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// Independent stream seed for (seed, tag, index), via FNV-1a and splitmix64.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tag) {
        h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
    }
    std::uint64_t z = seed ^ h ^ (index * 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace vidcurate
