#pragma once

#include <cstddef>
#include <vector>

#include "consensus_vem/table.hpp"

namespace cvem {

// Labels are 0-indexed everywhere inside the library. The file formats and
// the CLI use 1-indexed labels; conversion happens in the io layer only.

struct ProblemShape {
    std::size_t n_objects = 0;
    std::size_t n_classes = 0;
    std::size_t n_classifiers = 0;
    std::size_t n_clusterings = 0;
    std::vector<std::size_t> clusters_per_clustering;

    /// Throws InvalidArgument when a count is out of range.
    void validate() const;
    bool operator==(const ProblemShape&) const = default;
};

/// The observed ensemble outputs: one hard class label per (object,
/// classifier) and one cluster label per (object, clustering).
struct LabelObservations {
    LabelMatrix class_labels;    // N x r1, entries in [0, k)
    LabelMatrix cluster_labels;  // N x r2, column m entries in [0, k_m)

    void validate(const ProblemShape& shape) const;
    bool operator==(const LabelObservations&) const = default;
};

/// Global model parameters. Covariances are diagonal; sigma2 holds the
/// diagonal of the prior covariance of y_n.
struct ModelParams {
    std::vector<double> mu;
    std::vector<double> sigma2;
    double delta2 = 1.0;
    std::vector<Matrix> beta;  // beta[m] is k x k_m, rows on the simplex

    void validate(const ProblemShape& shape) const;
};

/// Per-object variational parameters plus the two Taylor points.
struct VariationalState {
    Matrix mu_n;                // N x k
    Matrix sigma_n2;            // N x k, > 0
    Matrix eps_n;               // N x k
    Matrix delta_n2;            // N x k, > 0
    std::vector<Matrix> phi;    // phi[m] is N x k, rows on the simplex
    std::vector<double> kappa;  // N, > 0
    std::vector<double> xi;     // N, > 0

    VariationalState() = default;
    VariationalState(std::size_t n_objects, std::size_t n_classes, std::size_t n_clusterings);

    std::size_t n_objects() const noexcept { return mu_n.rows(); }
    std::size_t n_classes() const noexcept { return mu_n.cols(); }

    void validate() const;
};

struct PosteriorResult {
    Matrix class_posteriors;       // N x k, row n = softmax(mu_n[n])
    std::vector<int> hard_labels;  // argmax per row, ties to the lowest index
    double final_elbo = 0.0;
    std::size_t n_outer_iterations = 0;
};

/// Latent draws produced alongside sampled observations.
struct LatentTruth {
    Matrix y;
    Matrix theta;
    LabelMatrix z;  // N x r2
};

/// Per-class counts of classifier votes for every object (N x k).
Matrix vote_counts(const LabelObservations& w, std::size_t n_classes);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace cvem
