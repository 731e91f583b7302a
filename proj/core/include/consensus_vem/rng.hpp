#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace cvem {

/// Seeded generator used by every stochastic routine in the library.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the standard.
/// Uniforms and normals are derived here (53-bit mantissa, Box-Muller) rather
/// than through <random> distributions, whose algorithms are unspecified, so
/// a given seed produces the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on (0, 1].
    double uniform_open_low() { return 1.0 - uniform(); }
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    /// Draws an index with probability proportional to `weights`.
    std::size_t categorical(std::span<const double> weights);
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed from a master seed and a tuple of
/// indices (SplitMix64 finalizer chained over the inputs).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace cvem
