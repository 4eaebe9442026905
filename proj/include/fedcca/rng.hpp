#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedcca {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// the standard); all distributions are implemented here instead of relying
// on std::*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform double in (0, 1].
    double uniform_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller; one spare value is cached.
    double normal();

    // Gamma(shape=alpha, scale=1), Marsaglia-Tsang.
    double gamma(double alpha);

    // Dirichlet(alpha * ones(n)).
    std::vector<double> dirichlet(double alpha, std::size_t n);

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stateless seed derivation: master seed, round, client id and a stream tag
// are folded through splitmix64 one input at a time (the tag via FNV-1a).
// Distinct inputs give independent streams; identical inputs always give the
// same stream.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t round,
                          std::uint64_t client_id, std::string_view stream_tag);

Rng derive_rng(std::uint64_t master_seed, std::uint64_t round,
               std::uint64_t client_id, std::string_view stream_tag);

}  // namespace fedcca
