#include "hive/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hive {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = seed ^ 0x5851f42d4c957f2dULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x00000100000001b3ULL; // FNV-1a prime
    }
    h ^= index + 0x9e3779b97f4a7c15ULL;
    return splitmix64(h);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::log_uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_uniform requires 0 < lo <= hi");
    return std::exp(uniform(std::log(lo), std::log(hi)));
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(next_u64()); // full 64-bit span
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * M_PI * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        auto j = static_cast<std::size_t>(
            uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace hive
