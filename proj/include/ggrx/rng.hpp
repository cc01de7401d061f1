#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ggrx {

// All randomness in the library flows through a single user-visible seed.
// Component streams are derived counter-style: hash the component name and
// index into the master seed, then run the result through a splitmix64
// finalizer. Two components never share a stream, and adding draws to one
// component does not perturb another.
uint64_t derive_seed(uint64_t master, std::string_view component, uint64_t index = 0);

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    size_t uniform_index(size_t n);

    // Draw an index from an unnormalized weight vector.
    size_t weighted_index(const std::vector<double>& weights);

    // Standard normal via Box-Muller (cached second value discarded for
    // reproducibility across call patterns).
    double normal();

    // First k of a Fisher-Yates shuffle of [0, n).
    std::vector<size_t> sample_without_replacement(size_t n, size_t k);

    std::vector<size_t> permutation(size_t n);

private:
    std::mt19937_64 eng_;
};

} // namespace ggrx
