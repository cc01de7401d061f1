#include "ggrx/rng.hpp"

#include "ggrx/error.hpp"

#include <cmath>

namespace ggrx {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

uint64_t derive_seed(uint64_t master, std::string_view component, uint64_t index) {
    uint64_t h = splitmix64(master ^ fnv1a(component));
    return splitmix64(h ^ splitmix64(index));
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

size_t Rng::uniform_index(size_t n) {
    if (n == 0) throw Error("uniform_index: empty range");
    uint64_t bound = n;
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<size_t>(x % bound);
}

size_t Rng::weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw Error("weighted_index: negative weight");
        total += w;
    }
    if (total <= 0.0) throw Error("weighted_index: all weights zero");
    double r = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return i;
    }
    return weights.size() - 1;
}

double Rng::normal() {
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

std::vector<size_t> Rng::sample_without_replacement(size_t n, size_t k) {
    if (k > n) throw Error("sample_without_replacement: k exceeds population");
    std::vector<size_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = i;
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + uniform_index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

std::vector<size_t> Rng::permutation(size_t n) {
    return sample_without_replacement(n, n);
}

} // namespace ggrx
