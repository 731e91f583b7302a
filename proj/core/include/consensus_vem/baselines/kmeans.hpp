#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "consensus_vem/table.hpp"

namespace cvem::baselines {

struct KMeansResult {
    std::vector<int> labels;  // 0-indexed
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    /// Inertia after every assignment step.
    std::vector<double> inertia_trace;
};

/// Lloyd's algorithm from n_clusters distinct random points. Stops after
/// max_iter iterations or when no centroid moves more than tol. A cluster
/// that empties is reseeded at the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t n_clusters, std::uint64_t seed,
                    std::size_t max_iter = 300, double tol = 1e-6);

double inertia(const Matrix& points, const Matrix& centroids, const std::vector<int>& labels);

}  // namespace cvem::baselines
