#include "fqilog/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fqilog {

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t st = base ^ (tag * 0xD1B54A32D192ED03ULL);
    return splitmix64(st);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t st = seed;
    for (auto& w : s_) w = splitmix64(st);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    // Lemire-style rejection to avoid modulo bias.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::exponential() {
    // 1 - U lies in (0, 1], so the log is finite.
    return -std::log(1.0 - uniform());
}

std::vector<double> Rng::dirichlet(std::size_t n) {
    std::vector<double> out(n);
    double total = 0.0;
    for (auto& v : out) {
        v = exponential();
        total += v;
    }
    if (total <= 0.0) {
        for (auto& v : out) v = 1.0 / static_cast<double>(n);
        return out;
    }
    for (auto& v : out) v /= total;
    return out;
}

}  // namespace fqilog
