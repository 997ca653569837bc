#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fqilog {

/// splitmix64 step. Used for seeding and for deriving independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a base seed with a stream tag into a fresh seed (one splitmix64 round).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

/// xoshiro256++ seeded through splitmix64.
///
/// The generator and its derived distributions are fully specified here so
/// dataset manifests and theory reports are comparable across builds and
/// platforms; nothing in this class depends on <random> distributions.
class Rng {
public:
    static constexpr std::string_view kAlgorithm = "xoshiro256++/splitmix64";

    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Exp(1) variate via inversion.
    double exponential();

    /// Flat Dirichlet sample of length n (sums to one, entries >= 0).
    std::vector<double> dirichlet(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace fqilog
