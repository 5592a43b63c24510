#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace sigforge {

/// xoshiro256** seeded through splitmix64.
///
/// Every randomized operation in the library draws from one of these.
/// Independent stages derive their own generator with stream(), keyed by a
/// fixed stream id, so adding draws to one stage never shifts the values
/// another stage sees. Identical (seed, stream) always reproduces the exact
/// byte-for-byte draw sequence.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    /// Generator for an independent stream derived from (seed, stream_id).
    static Rng stream(uint64_t seed, uint64_t stream_id) {
        return Rng(mix_seed(seed, stream_id));
    }

    /// Deterministically combines a seed with a tag (used for sub-seeds).
    static uint64_t mix_seed(uint64_t seed, uint64_t tag) {
        uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL + tag * 0xBF58476D1CE4E5B9ULL);
        return splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound). bound must be > 0. Rejection keeps it unbiased.
    uint64_t below(uint64_t bound) {
        const uint64_t limit = (UINT64_MAX / bound) * bound;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<size_t> permutation(size_t n) {
        std::vector<size_t> p(n);
        std::iota(p.begin(), p.end(), size_t{0});
        shuffle(p);
        return p;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t state_[4];
};

// Fixed stream ids. Offsets within one purpose stay far below the 2^40 gap.
namespace streams {
constexpr uint64_t kGenShared = 1ULL << 40;
constexpr uint64_t kGenFamilyBase = 2ULL << 40;
constexpr uint64_t kGenVariantBase = 3ULL << 40;
constexpr uint64_t kSplitClassBase = 4ULL << 40;
constexpr uint64_t kLayerBase = 5ULL << 40;
constexpr uint64_t kFineTune = 6ULL << 40;
constexpr uint64_t kSvmClassBase = 7ULL << 40;
constexpr uint64_t kTsnePointBase = 8ULL << 40;
}  // namespace streams

}  // namespace sigforge
