#include "consensus_vem/elbo.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "consensus_vem/errors.hpp"

namespace cvem {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

// r * (sum_i exp(mean_i + var_i/2) / c + log c - 1), evaluated without forming
// the possibly huge numerator.
double taylor_bound(std::span<const double> mean, std::span<const double> var, double point,
                    double multiplicity) {
    if (multiplicity == 0.0) return 0.0;
    const double log_point = std::log(point);
    double ratio = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) ratio += std::exp(mean[i] + 0.5 * var[i] - log_point);
    return multiplicity * (ratio + log_point - 1.0);
}

void check_state(const ModelParams& params, const VariationalState& vs) {
    for (double s : params.sigma2) {
        if (!(s > 0.0)) throw InvalidState("elbo: sigma2 must be positive");
    }
    if (!(params.delta2 > 0.0)) throw InvalidState("elbo: delta2 must be positive");
    vs.validate();
}

}  // namespace

ObjectRows object_rows(const VariationalState& vs, std::size_t n) {
    return {vs.mu_n.row(n), vs.sigma_n2.row(n), vs.eps_n.row(n), vs.delta_n2.row(n),
            vs.kappa[n],    vs.xi[n]};
}

CoreTerms object_core_terms(const ModelParams& params, const ObjectRows& rows,
                            std::span<const double> votes, std::size_t n_classifiers,
                            std::span<const double> phi_mass, std::size_t n_clusterings) {
    CoreTerms t;
    const std::size_t k = rows.mu_n.size();
    const double log_delta2 = std::log(params.delta2);
    for (std::size_t i = 0; i < k; ++i) {
        const double dev = rows.mu_n[i] - params.mu[i];
        t.prior_y += -0.5 * (kLog2Pi + std::log(params.sigma2[i])) -
                     (rows.sigma_n2[i] + dev * dev) / (2.0 * params.sigma2[i]);
        const double gap = rows.eps_n[i] - rows.mu_n[i];
        t.coupling += -0.5 * (kLog2Pi + log_delta2) -
                      (gap * gap + rows.sigma_n2[i] + rows.delta_n2[i]) / (2.0 * params.delta2);
        t.gaussian_entropy += 0.5 * (kLog2Pi + 1.0 + std::log(rows.sigma_n2[i])) +
                              0.5 * (kLog2Pi + 1.0 + std::log(rows.delta_n2[i]));
    }
    double vote_dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) vote_dot += votes[i] * rows.mu_n[i];
    t.classifier = vote_dot - taylor_bound(rows.mu_n, rows.sigma_n2, rows.kappa,
                                           static_cast<double>(n_classifiers));
    double mass_dot = 0.0;
    if (n_clusterings > 0) {
        for (std::size_t i = 0; i < k; ++i) mass_dot += phi_mass[i] * rows.eps_n[i];
    }
    t.assignment = mass_dot - taylor_bound(rows.eps_n, rows.delta_n2, rows.xi,
                                           static_cast<double>(n_clusterings));
    return t;
}

ClusterTerms cluster_column_terms(std::span<const double> phi_row, const Matrix& beta_m,
                                  int cluster_label) {
    ClusterTerms t;
    const auto j = static_cast<std::size_t>(cluster_label);
    for (std::size_t i = 0; i < phi_row.size(); ++i) {
        const double p = phi_row[i];
        if (p > 0.0) {
            t.emission += p * std::log(beta_m(i, j));
            t.entropy -= p * std::log(p);
        }
    }
    return t;
}

void ClusterAggregate::add_column(std::span<const double> phi_row, const Matrix& beta_m,
                                  int cluster_label) {
    for (std::size_t i = 0; i < phi_row.size(); ++i) phi_mass[i].add(phi_row[i]);
    const ClusterTerms t = cluster_column_terms(phi_row, beta_m, cluster_label);
    value.add(t.value());
    emission.add(t.emission);
    entropy.add(t.entropy);
}

void ClusterAggregate::merge(const ClusterAggregate& other) {
    if (phi_mass.empty()) phi_mass.resize(other.phi_mass.size());
    for (std::size_t i = 0; i < other.phi_mass.size(); ++i) phi_mass[i].merge(other.phi_mass[i]);
    value.merge(other.value);
    emission.merge(other.emission);
    entropy.merge(other.entropy);
}

std::vector<double> ClusterAggregate::mass_values() const {
    std::vector<double> out(phi_mass.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = phi_mass[i].value();
    return out;
}

double object_value(const ModelParams& params, const ObjectRows& rows,
                    std::span<const double> votes, std::size_t n_classifiers,
                    const ClusterAggregate& cluster, std::size_t n_clusterings) {
    const std::vector<double> mass = cluster.mass_values();
    const CoreTerms core =
        object_core_terms(params, rows, votes, n_classifiers, mass, n_clusterings);
    return core.value() + cluster.value.value();
}

namespace {

ClusterAggregate object_cluster_aggregate(const LabelObservations& w, const ModelParams& params,
                                          const VariationalState& vs, std::size_t n) {
    ClusterAggregate agg(vs.n_classes());
    for (std::size_t m = 0; m < vs.phi.size(); ++m) {
        agg.add_column(vs.phi[m].row(n), params.beta[m], w.cluster_labels(n, m));
    }
    return agg;
}

}  // namespace

ElboTerms elbo_terms(const LabelObservations& w, const ModelParams& params,
                     const VariationalState& vs) {
    check_state(params, vs);
    const Matrix votes = vote_counts(w, vs.n_classes());
    const std::size_t r1 = w.class_labels.cols();
    const std::size_t r2 = vs.phi.size();
    ExactSum prior_y, coupling, classifier, assignment, emission, entropy, total;
    for (std::size_t n = 0; n < vs.n_objects(); ++n) {
        const ClusterAggregate agg = object_cluster_aggregate(w, params, vs, n);
        const std::vector<double> mass = agg.mass_values();
        const CoreTerms core = object_core_terms(params, object_rows(vs, n), votes.row(n), r1, mass, r2);
        prior_y.add(core.prior_y);
        coupling.add(core.coupling);
        classifier.add(core.classifier);
        assignment.add(core.assignment);
        emission.merge(agg.emission);
        entropy.add(core.gaussian_entropy);
        entropy.merge(agg.entropy);
        total.add(core.value() + agg.value.value());
    }
    return {prior_y.value(), coupling.value(), classifier.value(), assignment.value(),
            emission.value(), entropy.value(),  total.value()};
}

double elbo(const LabelObservations& w, const ModelParams& params, const VariationalState& vs) {
    return elbo_terms(w, params, vs).total;
}

double object_elbo(const LabelObservations& w, const ModelParams& params,
                   const VariationalState& vs, std::span<const double> votes, std::size_t n) {
    return object_value(params, object_rows(vs, n), votes, w.class_labels.cols(),
                        object_cluster_aggregate(w, params, vs, n), vs.phi.size());
}

}  // namespace cvem
