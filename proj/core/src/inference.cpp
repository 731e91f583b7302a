#include "consensus_vem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "consensus_vem/objectives.hpp"
#include "consensus_vem/parallel.hpp"
#include "consensus_vem/posterior.hpp"
#include "consensus_vem/rng.hpp"
#include "consensus_vem/softmax.hpp"

namespace cvem {

namespace {

constexpr double kJitter = 0.01;

std::vector<std::size_t> all_objects(std::size_t n) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return ids;
}

void store_row(std::span<double> dst, const std::vector<double>& src, double floor = -HUGE_VAL) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(src[i], floor);
}

}  // namespace

void FitConfig::validate() const {
    if (!(outer_rel_tol > 0.0) || !(estep_rel_tol > 0.0) || !(ascent.rel_tol > 0.0)) {
        throw InvalidArgument("fit config: tolerances must be positive");
    }
    if (!(phi_floor > 0.0 && phi_floor < 1e-3) || !(beta_floor > 0.0 && beta_floor < 1e-3)) {
        throw InvalidArgument("fit config: floors must lie in (0, 1e-3)");
    }
    if (outer_max_iter == 0 || estep_max_sweeps == 0 || ascent.max_iter == 0) {
        throw InvalidArgument("fit config: iteration limits must be positive");
    }
}

// ---------------------------------------------------------------------------
// Initialization

std::vector<double> initial_mu_row(std::span<const double> votes, std::size_t n_classifiers) {
    const std::size_t k = votes.size();
    std::vector<double> row(k, 0.0);
    if (n_classifiers == 0) return row;
    const double denom = static_cast<double>(n_classifiers + k);
    for (std::size_t i = 0; i < k; ++i) row[i] = std::log((votes[i] + 1.0) / denom);
    return row;
}

void initial_phi_row(std::span<const double> mu_row, std::uint64_t seed, std::size_t object,
                     std::size_t clustering, std::span<double> out) {
    softmax_into(mu_row, out);
    Rng rng(derive_seed(seed, 0x9417ULL, object, clustering));
    double total = 0.0;
    for (double& p : out) {
        p *= 1.0 + kJitter * (2.0 * rng.uniform() - 1.0);
        total += p;
    }
    for (double& p : out) p /= total;
}

Initialization initialize(const LabelObservations& w, const ProblemShape& shape,
                          std::uint64_t seed, const FitConfig& cfg) {
    w.validate(shape);
    const std::size_t n_objects = shape.n_objects;
    const std::size_t k = shape.n_classes;
    const std::size_t r1 = shape.n_classifiers;
    const std::size_t r2 = shape.n_clusterings;

    Initialization init;
    VariationalState& vs = init.state;
    vs = VariationalState(n_objects, k, r2);
    const Matrix votes = vote_counts(w, k);
    for (std::size_t n = 0; n < n_objects; ++n) {
        const std::vector<double> row = initial_mu_row(votes.row(n), r1);
        store_row(vs.mu_n.row(n), row);
        store_row(vs.eps_n.row(n), row);
        for (std::size_t m = 0; m < r2; ++m) initial_phi_row(row, seed, n, m, vs.phi[m].row(n));
        refresh_taylor_points(vs, n);
    }

    ModelParams& params = init.params;
    params.mu = mstep_mu(vs);
    params.sigma2.assign(k, 1.0);
    params.delta2 = 1.0;
    params.beta = mstep_beta(w, vs, shape.clusters_per_clustering, cfg.beta_floor);
    return init;
}

// ---------------------------------------------------------------------------
// E-step updates

void refresh_taylor_points(VariationalState& vs, std::size_t n) {
    vs.kappa[n] = taylor_point(vs.mu_n.row(n), vs.sigma_n2.row(n));
    vs.xi[n] = taylor_point(vs.eps_n.row(n), vs.delta_n2.row(n));
}

void update_kappa(VariationalState& vs) {
    for (std::size_t n = 0; n < vs.n_objects(); ++n) {
        vs.kappa[n] = taylor_point(vs.mu_n.row(n), vs.sigma_n2.row(n));
    }
}

void update_xi(VariationalState& vs) {
    for (std::size_t n = 0; n < vs.n_objects(); ++n) {
        vs.xi[n] = taylor_point(vs.eps_n.row(n), vs.delta_n2.row(n));
    }
}

void phi_row_update(std::span<const double> eps_n, const Matrix& beta_m, int cluster_label,
                    const FitConfig& cfg, std::span<double> out) {
    const auto j = static_cast<std::size_t>(cluster_label);
    const std::size_t k = eps_n.size();
    std::vector<double> logits(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double b = beta_m(i, j);
        logits[i] = eps_n[i] + (cfg.phi_update == PhiUpdateForm::Elbo ? std::log(b) : b);
    }
    softmax_into(logits, out);
    bool floored = false;
    for (double& p : out) {
        if (p < cfg.phi_floor) {
            p = cfg.phi_floor;
            floored = true;
        }
    }
    if (floored) {
        double total = 0.0;
        for (double p : out) total += p;
        for (double& p : out) p /= total;
    }
}

void update_phi(const LabelObservations& w, const ModelParams& params, VariationalState& vs,
                const FitConfig& cfg) {
    for (std::size_t m = 0; m < vs.phi.size(); ++m) {
        for (std::size_t n = 0; n < vs.n_objects(); ++n) {
            phi_row_update(vs.eps_n.row(n), params.beta[m], w.cluster_labels(n, m), cfg,
                           vs.phi[m].row(n));
        }
    }
}

double y_block_weight(const VariationalState& vs, std::size_t n, std::size_t n_classifiers,
                      ObjectiveForm form) {
    const double taylor = form == ObjectiveForm::Elbo ? vs.kappa[n] : vs.xi[n];
    return static_cast<double>(n_classifiers) / taylor;
}

double theta_block_weight(const VariationalState& vs, std::size_t n, std::size_t n_clusterings,
                          ObjectiveForm form) {
    const double multiplicity =
        form == ObjectiveForm::Elbo ? static_cast<double>(n_clusterings) : (n_clusterings > 0 ? 1.0 : 0.0);
    return multiplicity / vs.xi[n];
}

AscentReport ascend_mu_n(const ModelParams& params, VariationalState& vs, std::size_t n,
                         std::span<const double> votes, std::size_t n_classifiers,
                         const FitConfig& cfg, double initial_step) {
    const double weight = y_block_weight(vs, n, n_classifiers, cfg.objective_form);
    const ObjectiveSpec obj = mu_n_objective(params, vs.eps_n.row(n), vs.sigma_n2.row(n), votes, weight);
    AscentOptions options = cfg.ascent;
    options.initial_step = initial_step;
    AscentReport report = maximize(obj, vs.mu_n.row(n), options);
    store_row(vs.mu_n.row(n), report.argmax);
    return report;
}

AscentReport ascend_sigma_n2(const ModelParams& params, VariationalState& vs, std::size_t n,
                             std::size_t n_classifiers, const FitConfig& cfg, double initial_step) {
    // The sigma_n2 row of the original table divides by kappa_n in both forms.
    const double weight = static_cast<double>(n_classifiers) / vs.kappa[n];
    const double log_sign = cfg.objective_form == ObjectiveForm::Elbo ? 1.0 : -1.0;
    const ObjectiveSpec obj = sigma_n2_objective(params, vs.mu_n.row(n), weight, log_sign);
    AscentOptions options = cfg.ascent;
    options.initial_step = initial_step;
    AscentReport report = maximize(obj, vs.sigma_n2.row(n), options);
    store_row(vs.sigma_n2.row(n), report.argmax, kVarianceFloor);
    return report;
}

AscentReport ascend_epsilon_n(const ModelParams& params, VariationalState& vs, std::size_t n,
                              std::span<const double> phi_mass, std::size_t n_clusterings,
                              const FitConfig& cfg, double initial_step) {
    const double weight = theta_block_weight(vs, n, n_clusterings, cfg.objective_form);
    const ObjectiveSpec obj =
        eps_n_objective(params, vs.mu_n.row(n), vs.delta_n2.row(n), phi_mass, weight);
    AscentOptions options = cfg.ascent;
    options.initial_step = initial_step;
    AscentReport report = maximize(obj, vs.eps_n.row(n), options);
    store_row(vs.eps_n.row(n), report.argmax);
    return report;
}

AscentReport ascend_delta_n2(const ModelParams& params, VariationalState& vs, std::size_t n,
                             std::size_t n_clusterings, const FitConfig& cfg, double initial_step) {
    const double weight = static_cast<double>(n_clusterings) / vs.xi[n];
    const double log_sign = cfg.objective_form == ObjectiveForm::Elbo ? 1.0 : -1.0;
    const ObjectiveSpec obj = delta_n2_objective(params, vs.eps_n.row(n), weight, log_sign);
    AscentOptions options = cfg.ascent;
    options.initial_step = initial_step;
    AscentReport report = maximize(obj, vs.delta_n2.row(n), options);
    store_row(vs.delta_n2.row(n), report.argmax, kVarianceFloor);
    return report;
}

void ascend_object(const ModelParams& params, VariationalState& vs, std::size_t n,
                   std::span<const double> votes, std::size_t n_classifiers,
                   std::span<const double> phi_mass, std::size_t n_clusterings,
                   const FitConfig& cfg, BlockSteps& steps) {
    steps.mu = ascend_mu_n(params, vs, n, votes, n_classifiers, cfg, steps.mu).last_step;
    steps.sigma = ascend_sigma_n2(params, vs, n, n_classifiers, cfg, steps.sigma).last_step;
    steps.eps = ascend_epsilon_n(params, vs, n, phi_mass, n_clusterings, cfg, steps.eps).last_step;
    steps.delta = ascend_delta_n2(params, vs, n, n_clusterings, cfg, steps.delta).last_step;
}

bool object_converged(double previous, double current, double rel_tol) {
    return std::abs(current - previous) <= rel_tol * std::abs(previous);
}

EStepReport e_step(const LabelObservations& w, const ModelParams& params, VariationalState& vs,
                   const FitConfig& cfg) {
    const std::size_t n_objects = vs.n_objects();
    const std::size_t k = vs.n_classes();
    const std::size_t r1 = w.class_labels.cols();
    const std::size_t r2 = vs.phi.size();
    const Matrix votes = vote_counts(w, k);

    std::vector<std::size_t> sweeps_used(n_objects, 0);
    std::vector<char> converged(n_objects, 0);
    parallel_for(n_objects, worker_count(cfg.threads), [&](std::size_t n) {
        BlockSteps steps{cfg.ascent.initial_step, cfg.ascent.initial_step, cfg.ascent.initial_step,
                         cfg.ascent.initial_step};
        double previous = 0.0;
        for (std::size_t sweep = 0; sweep < cfg.estep_max_sweeps; ++sweep) {
            refresh_taylor_points(vs, n);
            ClusterAggregate agg(k);
            for (std::size_t m = 0; m < r2; ++m) {
                const int label = w.cluster_labels(n, m);
                phi_row_update(vs.eps_n.row(n), params.beta[m], label, cfg, vs.phi[m].row(n));
                agg.add_column(vs.phi[m].row(n), params.beta[m], label);
            }
            const std::vector<double> mass = agg.mass_values();
            ascend_object(params, vs, n, votes.row(n), r1, mass, r2, cfg, steps);
            const double current = object_value(params, object_rows(vs, n), votes.row(n), r1, agg, r2);
            if (!std::isfinite(current)) {
                throw NumericalFailure("e-step: object bound is not finite for object " +
                                       std::to_string(n));
            }
            sweeps_used[n] = sweep + 1;
            if (sweep > 0 && object_converged(previous, current, cfg.estep_rel_tol)) {
                converged[n] = 1;
                break;
            }
            previous = current;
        }
    });

    EStepReport report;
    report.max_sweeps_used = *std::max_element(sweeps_used.begin(), sweeps_used.end());
    report.objects_converged = static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 1));
    return report;
}

// ---------------------------------------------------------------------------
// M-step

std::vector<ExactSum> partial_mu(const VariationalState& vs, std::span<const std::size_t> objects) {
    std::vector<ExactSum> sums(vs.n_classes());
    for (std::size_t n : objects) {
        const auto row = vs.mu_n.row(n);
        for (std::size_t i = 0; i < row.size(); ++i) sums[i].add(row[i]);
    }
    return sums;
}

std::vector<double> finalize_mu(const std::vector<ExactSum>& sums, std::size_t n_objects) {
    std::vector<double> mu(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) mu[i] = sums[i].value() / static_cast<double>(n_objects);
    return mu;
}

ExactSum partial_delta2(const VariationalState& vs, std::span<const std::size_t> objects) {
    ExactSum sum;
    for (std::size_t n : objects) {
        for (std::size_t i = 0; i < vs.n_classes(); ++i) {
            const double gap = vs.eps_n(n, i) - vs.mu_n(n, i);
            sum.add(gap * gap);
            sum.add(vs.sigma_n2(n, i));
            sum.add(vs.delta_n2(n, i));
        }
    }
    return sum;
}

double finalize_delta2(const ExactSum& sum, std::size_t n_objects, std::size_t n_classes) {
    return std::max(sum.value() / static_cast<double>(n_objects * n_classes), kVarianceFloor);
}

std::vector<ExactSum> partial_sigma2_spread(const VariationalState& vs, std::span<const double> mu,
                                            std::span<const std::size_t> objects) {
    std::vector<ExactSum> sums(vs.n_classes());
    for (std::size_t n : objects) {
        for (std::size_t i = 0; i < vs.n_classes(); ++i) {
            const double dev = vs.mu_n(n, i) - mu[i];
            sums[i].add(vs.sigma_n2(n, i));
            sums[i].add(dev * dev);
        }
    }
    return sums;
}

std::vector<double> finalize_sigma2(const std::vector<ExactSum>& spread, std::size_t n_objects) {
    std::vector<double> sigma2(spread.size());
    for (std::size_t i = 0; i < spread.size(); ++i) {
        sigma2[i] = std::max(spread[i].value() / static_cast<double>(n_objects), kVarianceFloor);
    }
    return sigma2;
}

std::vector<ExactSum> partial_beta(const Matrix& phi_m, std::span<const int> labels_m,
                                   std::size_t n_clusters, std::span<const std::size_t> objects) {
    const std::size_t k = phi_m.cols();
    std::vector<ExactSum> counts(k * n_clusters);
    for (std::size_t idx = 0; idx < objects.size(); ++idx) {
        const std::size_t n = objects[idx];
        const auto j = static_cast<std::size_t>(labels_m[idx]);
        for (std::size_t i = 0; i < k; ++i) counts[i * n_clusters + j].add(phi_m(n, i));
    }
    return counts;
}

Matrix finalize_beta(const std::vector<ExactSum>& counts, std::size_t n_classes,
                     std::size_t n_clusters, double floor) {
    Matrix beta(n_classes, n_clusters);
    for (std::size_t i = 0; i < n_classes; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < n_clusters; ++j) {
            beta(i, j) = counts[i * n_clusters + j].value() + floor;
            total += beta(i, j);
        }
        for (std::size_t j = 0; j < n_clusters; ++j) beta(i, j) /= total;
    }
    return beta;
}

std::vector<double> mstep_mu(const VariationalState& vs) {
    const auto ids = all_objects(vs.n_objects());
    return finalize_mu(partial_mu(vs, ids), vs.n_objects());
}

std::vector<Matrix> mstep_beta(const LabelObservations& w, const VariationalState& vs,
                               std::span<const std::size_t> clusters_per_clustering,
                               double beta_floor) {
    const auto ids = all_objects(vs.n_objects());
    std::vector<Matrix> beta;
    std::vector<int> labels(vs.n_objects());
    for (std::size_t m = 0; m < vs.phi.size(); ++m) {
        for (std::size_t n = 0; n < vs.n_objects(); ++n) labels[n] = w.cluster_labels(n, m);
        const std::size_t km = clusters_per_clustering[m];
        beta.push_back(finalize_beta(partial_beta(vs.phi[m], labels, km, ids), vs.n_classes(), km,
                                     beta_floor));
    }
    return beta;
}

double mstep_delta2(const VariationalState& vs) {
    const auto ids = all_objects(vs.n_objects());
    return finalize_delta2(partial_delta2(vs, ids), vs.n_objects(), vs.n_classes());
}

std::vector<double> mstep_sigma2(const VariationalState& vs, std::span<const double> mu) {
    const auto ids = all_objects(vs.n_objects());
    std::vector<ExactSum> spread = partial_sigma2_spread(vs, mu, ids);
    std::vector<double> sigma2 = finalize_sigma2(spread, vs.n_objects());
#ifndef NDEBUG
    // The closed form must be a maximizer of the sigma2 objective.
    std::vector<double> s(spread.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = spread[i].value();
    const ObjectiveSpec obj = sigma2_objective(s, vs.n_objects());
    const double at = obj.eval(sigma2);
    for (double scale : {0.99, 1.01}) {
        std::vector<double> probe = sigma2;
        for (double& v : probe) v *= scale;
        if (obj.eval(probe) > at + 1e-9 * std::max(1.0, std::abs(at)) &&
            sigma2[0] > kVarianceFloor) {
            throw InvalidState("mstep_sigma2: closed form is not a maximizer");
        }
    }
#endif
    return sigma2;
}

void m_step(const LabelObservations& w, const ProblemShape& shape, const VariationalState& vs,
            ModelParams& params, const FitConfig& cfg) {
    params.mu = mstep_mu(vs);
    params.delta2 = mstep_delta2(vs);
    params.beta = mstep_beta(w, vs, shape.clusters_per_clustering, cfg.beta_floor);
    params.sigma2 = mstep_sigma2(vs, params.mu);
}

// ---------------------------------------------------------------------------

FitResult fit(const LabelObservations& w, const ProblemShape& shape, const FitConfig& cfg) {
    cfg.validate();
    Initialization init = initialize(w, shape, cfg.seed, cfg);
    FitResult result{std::move(init.params), std::move(init.state), {}, {}};

    double previous = elbo(w, result.params, result.state);
    std::size_t iterations = 0;
    try {
        for (std::size_t iter = 0; iter < cfg.outer_max_iter; ++iter) {
            e_step(w, result.params, result.state, cfg);
            m_step(w, shape, result.state, result.params, cfg);
            const double current = elbo(w, result.params, result.state);
            if (!std::isfinite(current)) throw NumericalFailure("fit: bound is not finite");
            result.elbo_trace.push_back(current);
            iterations = iter + 1;
            const bool done = std::abs(current - previous) < cfg.outer_rel_tol * std::abs(previous);
            previous = current;
            if (done) break;
        }
    } catch (const NumericalFailure& e) {
        throw FitAborted(e.what(), result.elbo_trace);
    }

    result.posterior = posterior_from_state(result.state);
    result.posterior.final_elbo = previous;
    result.posterior.n_outer_iterations = iterations;
    return result;
}

}  // namespace cvem
