#include "consensus_vem/baselines/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "consensus_vem/errors.hpp"
#include "consensus_vem/rng.hpp"

namespace cvem::baselines {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

// Assigns every point to its nearest centroid (ties to the lowest index) and
// returns the inertia.
double assign(const Matrix& points, const Matrix& centroids, std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t n = 0; n < points.rows(); ++n) {
        double best = HUGE_VAL;
        int arg = 0;
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            const double d = sq_dist(points.row(n), centroids.row(c));
            if (d < best) {
                best = d;
                arg = static_cast<int>(c);
            }
        }
        labels[n] = arg;
        total += best;
    }
    return total;
}

}  // namespace

double inertia(const Matrix& points, const Matrix& centroids, const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t n = 0; n < points.rows(); ++n) {
        total += sq_dist(points.row(n), centroids.row(static_cast<std::size_t>(labels[n])));
    }
    return total;
}

KMeansResult kmeans(const Matrix& points, std::size_t n_clusters, std::uint64_t seed,
                    std::size_t max_iter, double tol) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    if (n_clusters == 0 || n_clusters > n) throw InvalidArgument("kmeans: need 1 <= n_clusters <= N");

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_clusters; ++i) std::swap(order[i], order[i + rng.below(n - i)]);

    KMeansResult r;
    r.centroids = Matrix(n_clusters, dim);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        std::ranges::copy(points.row(order[c]), r.centroids.row(c).begin());
    }
    r.labels.assign(n, 0);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        r.inertia = assign(points, r.centroids, r.labels);
        r.inertia_trace.push_back(r.inertia);
        r.iterations = iter + 1;

        Matrix next(n_clusters, dim);
        std::vector<std::size_t> sizes(n_clusters, 0);
        for (std::size_t p = 0; p < n; ++p) {
            const auto c = static_cast<std::size_t>(r.labels[p]);
            ++sizes[c];
            for (std::size_t d = 0; d < dim; ++d) next(c, d) += points(p, d);
        }
        std::vector<char> taken(n, 0);
        for (std::size_t c = 0; c < n_clusters; ++c) {
            if (sizes[c] > 0) {
                for (std::size_t d = 0; d < dim; ++d) next(c, d) /= static_cast<double>(sizes[c]);
                continue;
            }
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t p = 0; p < n; ++p) {
                if (taken[p]) continue;
                const double d = sq_dist(points.row(p), r.centroids.row(static_cast<std::size_t>(r.labels[p])));
                if (d > far_d) {
                    far_d = d;
                    far = p;
                }
            }
            taken[far] = 1;
            std::ranges::copy(points.row(far), next.row(c).begin());
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < n_clusters; ++c) {
            shift = std::max(shift, std::sqrt(sq_dist(next.row(c), r.centroids.row(c))));
        }
        r.centroids = std::move(next);
        if (shift < tol) break;
    }
    r.inertia = assign(points, r.centroids, r.labels);
    return r;
}

}  // namespace cvem::baselines
