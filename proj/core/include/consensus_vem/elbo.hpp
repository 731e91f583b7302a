#pragma once

#include <cstddef>
#include <span>

#include "consensus_vem/exact_sum.hpp"
#include "consensus_vem/model.hpp"

namespace cvem {

/// Additive breakdown of the evidence lower bound. The two softmax
/// normalizers are replaced by the first-order bound
///   log sum_i exp(x_i) <= (sum_i E[exp x_i]) / c + log c - 1
/// at Taylor points kappa_n (class labels, y_n) and xi_n (assignments, theta_n).
struct ElboTerms {
    double prior_y = 0.0;     // E[log N(y_n | mu, sigma2)]
    double coupling = 0.0;    // E[log N(theta_n | y_n, delta2 I)]
    double classifier = 0.0;  // bounded E[log p(class labels | y_n)]
    double assignment = 0.0;  // bounded E[log p(z_nm | theta_n)]
    double emission = 0.0;    // E[log p(cluster labels | beta, z_nm)]
    double entropy = 0.0;     // H(q)
    /// Canonical ELBO value: per-object totals summed in object order. Equal to
    /// the sum of the fields up to rounding.
    double total = 0.0;
};

/// Read-only view of one object's variational rows.
struct ObjectRows {
    std::span<const double> mu_n;
    std::span<const double> sigma_n2;
    std::span<const double> eps_n;
    std::span<const double> delta_n2;
    double kappa;
    double xi;
};

ObjectRows object_rows(const VariationalState& vs, std::size_t n);

/// Terms of one object's bound that need no cluster labels.
struct CoreTerms {
    double prior_y = 0.0;
    double coupling = 0.0;
    double classifier = 0.0;
    double assignment = 0.0;
    double gaussian_entropy = 0.0;

    double value() const { return prior_y + coupling + classifier + assignment + gaussian_entropy; }
};

/// `votes` holds per-class classifier vote counts; `phi_mass` holds
/// sum_m phi_nm. Both are aggregates, so label owners never expose raw labels.
CoreTerms object_core_terms(const ModelParams& params, const ObjectRows& rows,
                            std::span<const double> votes, std::size_t n_classifiers,
                            std::span<const double> phi_mass, std::size_t n_clusterings);

/// Emission and phi-entropy contributions of one (object, clustering) pair.
struct ClusterTerms {
    double emission = 0.0;
    double entropy = 0.0;

    double value() const { return emission + entropy; }
};

ClusterTerms cluster_column_terms(std::span<const double> phi_row, const Matrix& beta_m,
                                  int cluster_label);

/// What a holder of cluster labels contributes for one object, summed over
/// the clustering columns it holds. Accumulated exactly so that aggregates
/// from different holders combine to the same bits as a single holder's.
struct ClusterAggregate {
    std::vector<ExactSum> phi_mass;  // per class, sum_m phi_nm
    ExactSum value;                  // sum_m (emission + entropy)
    ExactSum emission;
    ExactSum entropy;

    explicit ClusterAggregate(std::size_t n_classes = 0) : phi_mass(n_classes) {}
    void add_column(std::span<const double> phi_row, const Matrix& beta_m, int cluster_label);
    void merge(const ClusterAggregate& other);
    std::vector<double> mass_values() const;
};

/// One object's summand of the bound given its aggregates.
double object_value(const ModelParams& params, const ObjectRows& rows,
                    std::span<const double> votes, std::size_t n_classifiers,
                    const ClusterAggregate& cluster, std::size_t n_clusterings);

/// Full bound with breakdown. Throws InvalidState on non-positive variances.
ElboTerms elbo_terms(const LabelObservations& w, const ModelParams& params,
                     const VariationalState& vs);

double elbo(const LabelObservations& w, const ModelParams& params, const VariationalState& vs);

/// One object's contribution to the bound (its summand in ElboTerms::total).
double object_elbo(const LabelObservations& w, const ModelParams& params,
                   const VariationalState& vs, std::span<const double> votes, std::size_t n);

}  // namespace cvem
