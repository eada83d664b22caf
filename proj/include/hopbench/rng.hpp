#pragma once
// Seedable randomness with a fully specified algorithm (splitmix64), so the
// same seed reproduces the same samples on any platform. std::shuffle and
// std::uniform_int_distribution are implementation-defined and must not be
// used anywhere an output artifact depends on the draw.

#include <cstdint>
#include <string_view>
#include <vector>

#include "hopbench/common.hpp"

namespace hopbench {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Avoid the all-zeros fixpoint-ish start; one warmup step is enough.
        next();
    }

    // splitmix64 step
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased draw in [0, bound) via rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = ~0ULL - (~0ULL % bound + 1) % bound;
        std::uint64_t v = next();
        while (v > limit) v = next();
        return v % bound;
    }

    double unit() {  // [0, 1)
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

private:
    std::uint64_t state_;
};

// Named sub-stream derivation: one CLI seed fans out into independent
// per-module, per-item streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
    return hash_combine(hash_combine(0xcbf29ce484222325ULL, seed), stream);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::string_view item) {
    return hash_combine(derive_seed(seed, stream), item);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t item) {
    return hash_combine(derive_seed(seed, stream), item);
}

// Fisher–Yates, deterministic given the rng state.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

// k distinct indices drawn uniformly without replacement from [0, n),
// in draw order. Partial Fisher–Yates over an index vector.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) k = n;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace hopbench
