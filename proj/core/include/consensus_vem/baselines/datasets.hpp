#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "consensus_vem/table.hpp"

namespace cvem::baselines {

/// Labelled points in the plane; labels are 0-indexed.
struct Dataset2D {
    Matrix points;  // N x 2
    std::vector<int> labels;
    std::size_t n_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
};

/// Two interleaved half circles of radius 1: class 0 is the upper half
/// (cos t, sin t), class 1 the lower half (1 - cos t, 0.5 - sin t), t evenly
/// spaced on [0, pi]. Isotropic Gaussian noise of sd noise_sd. n must be even.
Dataset2D make_half_moons(std::size_t n, double noise_sd, std::uint64_t seed);

/// Two concentric circles, class 0 inner; angles evenly spaced. n must be even.
Dataset2D make_circles(std::size_t n, double noise_sd, std::uint64_t seed,
                       std::array<double, 2> radii = {1.0, 2.0});

}  // namespace cvem::baselines
