#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace ptl {

// Boost distributions are specified algorithmically, so a seeded stream is
// the same on every standard library.
using Rng = boost::random::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64 finalizer). Used to give
/// every replication, fold split and source fit its own reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
    }
    return perm;
}

/// Draws `count` distinct values from {first, ..., last} (inclusive) by a
/// partial Fisher-Yates shuffle. Order of the result is the draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t first, std::size_t last,
                                                           std::size_t count, Rng& rng)
{
    std::vector<std::size_t> pool(last - first + 1);
    std::iota(pool.begin(), pool.end(), first);
    for (std::size_t i = 0; i < count; ++i) {
        boost::random::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(count);
    return pool;
}

inline double standard_normal(Rng& rng)
{
    boost::random::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

} // namespace ptl
