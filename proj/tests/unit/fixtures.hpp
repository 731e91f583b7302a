#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "consensus_vem/inference.hpp"
#include "consensus_vem/model.hpp"
#include "consensus_vem/rng.hpp"
#include "consensus_vem/sampler.hpp"
#include "consensus_vem/softmax.hpp"

namespace fixtures {

using namespace cvem;

struct Instance {
    ProblemShape shape;
    LabelObservations w;
    ModelParams params;
    VariationalState vs;
};

inline ProblemShape make_shape(std::size_t n, std::size_t k, std::size_t r1, std::size_t r2,
                               std::size_t km = 0) {
    ProblemShape s;
    s.n_objects = n;
    s.n_classes = k;
    s.n_classifiers = r1;
    s.n_clusterings = r2;
    for (std::size_t m = 0; m < r2; ++m) s.clusters_per_clustering.push_back(km ? km : k + m);
    return s;
}

inline void random_simplex_row(Rng& rng, std::span<double> row) {
    double total = 0.0;
    for (double& v : row) total += (v = 0.05 + rng.uniform());
    for (double& v : row) v /= total;
}

/// Parameters with a noisy-diagonal beta, the same family the recovery tests
/// sample from.
inline ModelParams recovery_params(const ProblemShape& s) {
    ModelParams p;
    p.mu.assign(s.n_classes, 0.0);
    p.sigma2.assign(s.n_classes, 4.0);
    p.delta2 = 0.1;
    for (std::size_t m = 0; m < s.n_clusterings; ++m) {
        const std::size_t km = s.clusters_per_clustering[m];
        Matrix b(s.n_classes, km, 0.0);
        for (std::size_t i = 0; i < s.n_classes; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < km; ++j) total += (b(i, j) = (j == i % km) ? 0.9 : 0.05);
            for (std::size_t j = 0; j < km; ++j) b(i, j) /= total;
        }
        p.beta.push_back(std::move(b));
    }
    return p;
}

/// Arbitrary but valid parameters, labels and variational state.
inline Instance random_instance(std::uint64_t seed, const ProblemShape& s) {
    Rng rng(seed);
    Instance in;
    in.shape = s;
    in.params.mu.resize(s.n_classes);
    in.params.sigma2.resize(s.n_classes);
    for (std::size_t i = 0; i < s.n_classes; ++i) {
        in.params.mu[i] = rng.normal(0.0, 1.0);
        in.params.sigma2[i] = 0.3 + 2.0 * rng.uniform();
    }
    in.params.delta2 = 0.2 + rng.uniform();
    for (std::size_t m = 0; m < s.n_clusterings; ++m) {
        Matrix b(s.n_classes, s.clusters_per_clustering[m]);
        for (std::size_t i = 0; i < s.n_classes; ++i) random_simplex_row(rng, b.row(i));
        in.params.beta.push_back(std::move(b));
    }
    in.w.class_labels = LabelMatrix(s.n_objects, s.n_classifiers);
    in.w.cluster_labels = LabelMatrix(s.n_objects, s.n_clusterings);
    for (std::size_t n = 0; n < s.n_objects; ++n) {
        for (std::size_t l = 0; l < s.n_classifiers; ++l) {
            in.w.class_labels(n, l) = static_cast<int>(rng.below(s.n_classes));
        }
        for (std::size_t m = 0; m < s.n_clusterings; ++m) {
            in.w.cluster_labels(n, m) = static_cast<int>(rng.below(s.clusters_per_clustering[m]));
        }
    }
    in.vs = VariationalState(s.n_objects, s.n_classes, s.n_clusterings);
    for (std::size_t n = 0; n < s.n_objects; ++n) {
        for (std::size_t i = 0; i < s.n_classes; ++i) {
            in.vs.mu_n(n, i) = rng.normal(0.0, 1.0);
            in.vs.sigma_n2(n, i) = 0.1 + rng.uniform();
            in.vs.eps_n(n, i) = rng.normal(0.0, 1.0);
            in.vs.delta_n2(n, i) = 0.1 + rng.uniform();
        }
        for (auto& phi_m : in.vs.phi) random_simplex_row(rng, phi_m.row(n));
        refresh_taylor_points(in.vs, n);
    }
    return in;
}

/// Observations drawn from the model with recovery_params.
struct Sampled {
    ProblemShape shape;
    LabelObservations w;
    LatentTruth truth;
    std::vector<int> labels;  // argmax y_n
};

inline Sampled sampled(std::uint64_t seed, const ProblemShape& s) {
    Sampled out;
    out.shape = s;
    auto [w, truth] = sample_dataset(recovery_params(s), s, seed);
    out.w = std::move(w);
    out.truth = std::move(truth);
    for (std::size_t n = 0; n < s.n_objects; ++n) {
        out.labels.push_back(static_cast<int>(argmax(out.truth.y.row(n))));
    }
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

inline double hit_rate(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i];
    return static_cast<double>(hits) / static_cast<double>(a.size());
}

}  // namespace fixtures
