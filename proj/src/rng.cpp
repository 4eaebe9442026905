#include "fedcca/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fedcca {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t excess = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
    const std::uint64_t limit = UINT64_MAX - excess;        // last accepted value
    std::uint64_t x = next_u64();
    while (excess != 0 && x > limit) x = next_u64();
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double Rng::gamma(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("Rng::gamma: alpha must be positive");
    if (alpha < 1.0) {
        const double u = uniform_open();
        return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> Rng::dirichlet(double alpha, std::size_t n) {
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = gamma(alpha);
        sum += v;
    }
    if (sum <= 0.0) {
        // All draws underflowed (only possible for extreme alpha); put the
        // whole mass on one uniformly chosen component.
        std::fill(p.begin(), p.end(), 0.0);
        p[static_cast<std::size_t>(below(n))] = 1.0;
        return p;
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t round,
                          std::uint64_t client_id, std::string_view stream_tag) {
    std::uint64_t s = splitmix64(master_seed);
    s = splitmix64(s ^ round);
    s = splitmix64(s ^ client_id);
    s = splitmix64(s ^ fnv1a64(stream_tag));
    return s;
}

Rng derive_rng(std::uint64_t master_seed, std::uint64_t round,
               std::uint64_t client_id, std::string_view stream_tag) {
    return Rng(derive_seed(master_seed, round, client_id, stream_tag));
}

}  // namespace fedcca
