#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace hive {

// splitmix64 step; used for seed fan-out so that every component, tree,
// restart and trial gets an independent stream derived from one root seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Stable seed derivation: hash(seed, tag, index). Same inputs, same stream,
// regardless of call order or thread placement.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

// Deterministic generator with explicit draw algorithms. The standard
// library distributions are implementation-defined, which would make frozen
// test values compiler-dependent; these are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double log_uniform(double lo, double hi);
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi); // inclusive
    double normal();
    double normal(double mean, double sd);

    // k distinct indices from [0, n), order not sorted (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4]; // xoshiro256** state
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace hive
