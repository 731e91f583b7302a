#include "consensus_vem/baselines/datasets.hpp"

#include <cmath>
#include <numbers>

#include "consensus_vem/errors.hpp"
#include "consensus_vem/rng.hpp"

namespace cvem::baselines {

namespace {

void check(std::size_t n, double noise_sd) {
    if (n == 0 || n % 2 != 0) throw InvalidArgument("dataset: n must be even and positive");
    if (!(noise_sd >= 0.0)) throw InvalidArgument("dataset: noise_sd must be non-negative");
}

Dataset2D blank(std::size_t n) {
    Dataset2D d;
    d.points = Matrix(n, 2);
    d.labels.assign(n, 0);
    d.n_classes = 2;
    return d;
}

void add_noise(Dataset2D& d, double noise_sd, std::uint64_t seed) {
    if (noise_sd == 0.0) return;
    Rng rng(seed);
    for (double& v : d.points.data()) v += noise_sd * rng.normal();
}

}  // namespace

Dataset2D make_half_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
    check(n, noise_sd);
    const std::size_t half = n / 2;
    Dataset2D d = blank(n);
    for (std::size_t i = 0; i < half; ++i) {
        const double t = half > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1) : 0.0;
        d.points(i, 0) = std::cos(t);
        d.points(i, 1) = std::sin(t);
        d.points(half + i, 0) = 1.0 - std::cos(t);
        d.points(half + i, 1) = 0.5 - std::sin(t);
        d.labels[half + i] = 1;
    }
    add_noise(d, noise_sd, seed);
    return d;
}

Dataset2D make_circles(std::size_t n, double noise_sd, std::uint64_t seed,
                       std::array<double, 2> radii) {
    check(n, noise_sd);
    if (!(radii[0] > 0.0) || !(radii[1] > 0.0)) throw InvalidArgument("make_circles: radii must be positive");
    const std::size_t half = n / 2;
    Dataset2D d = blank(n);
    for (std::size_t i = 0; i < half; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(half);
        for (std::size_t c = 0; c < 2; ++c) {
            d.points(c * half + i, 0) = radii[c] * std::cos(t);
            d.points(c * half + i, 1) = radii[c] * std::sin(t);
            d.labels[c * half + i] = static_cast<int>(c);
        }
    }
    add_noise(d, noise_sd, seed);
    return d;
}

}  // namespace cvem::baselines
