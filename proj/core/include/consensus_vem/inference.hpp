#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "consensus_vem/elbo.hpp"
#include "consensus_vem/errors.hpp"
#include "consensus_vem/exact_sum.hpp"
#include "consensus_vem/model.hpp"
#include "consensus_vem/numopt.hpp"

namespace cvem {

/// Which form of the assignment (phi) update to use. `Elbo` puts log beta in
/// the exponent, which is the exact coordinate maximizer of the bound;
/// `Printed` uses beta itself, as in the original update table.
enum class PhiUpdateForm { Elbo, Printed };

/// Which form of the four per-object numeric objectives to use. `Printed`
/// reproduces the original table verbatim: the y-block exponential divided by
/// xi_n, multiplicity 1 on the theta-block exponential, and negative
/// log-variance terms. Only `Elbo` is guaranteed to increase the bound.
enum class ObjectiveForm { Elbo, Printed };

inline constexpr double kVarianceFloor = 1e-10;

struct FitConfig {
    std::size_t outer_max_iter = 50;
    double outer_rel_tol = 1e-6;
    std::size_t estep_max_sweeps = 20;
    double estep_rel_tol = 1e-7;
    std::uint64_t seed = 0;
    double phi_floor = 1e-12;
    double beta_floor = 1e-12;
    PhiUpdateForm phi_update = PhiUpdateForm::Elbo;
    ObjectiveForm objective_form = ObjectiveForm::Elbo;
    /// Per coordinate block.
    AscentOptions ascent{};
    /// 0 = decide from CONSENSUS_VEM_THREADS / hardware.
    std::size_t threads = 0;

    void validate() const;
};

struct FitResult {
    ModelParams params;
    VariationalState state;
    PosteriorResult posterior;
    std::vector<double> elbo_trace;  // bound after every outer iteration
};

/// Thrown by fit() when a sub-step fails numerically; carries the trace so far.
class FitAborted : public NumericalFailure {
public:
    FitAborted(const std::string& what, std::vector<double> trace)
        : NumericalFailure(what), trace_(std::move(trace)) {}
    const std::vector<double>& elbo_trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

// ---------------------------------------------------------------------------
// Initialization

struct Initialization {
    ModelParams params;
    VariationalState state;
};

/// mu_n from Laplace-smoothed vote frequencies, eps_n = mu_n, unit variances,
/// phi_nm = softmax(mu_n) with +-1% seeded multiplicative jitter, beta from
/// phi, mu = mean of mu_n, sigma2 = 1, delta2 = 1, Taylor points at their
/// closed forms. With no classifiers mu_n starts at 0.
Initialization initialize(const LabelObservations& w, const ProblemShape& shape,
                          std::uint64_t seed, const FitConfig& cfg = {});

/// log((votes_i + 1) / (r1 + k)), or all zeros when r1 = 0.
std::vector<double> initial_mu_row(std::span<const double> votes, std::size_t n_classifiers);

/// Jittered softmax(mu_row) for (object, clustering); the jitter stream is
/// derived from (seed, object, clustering) so any holder can reproduce it.
void initial_phi_row(std::span<const double> mu_row, std::uint64_t seed, std::size_t object,
                     std::size_t clustering, std::span<double> out);

// ---------------------------------------------------------------------------
// E-step updates

void update_kappa(VariationalState& vs);
void update_xi(VariationalState& vs);
void refresh_taylor_points(VariationalState& vs, std::size_t n);

/// phi_nm over all (n, m).
void update_phi(const LabelObservations& w, const ModelParams& params, VariationalState& vs,
                const FitConfig& cfg = {});

/// One assignment row: phi_i proportional to exp(eps_i + log beta_m[i, label])
/// (or exp(eps_i + beta_m[i, label]) for the printed form), floored and
/// renormalized.
void phi_row_update(std::span<const double> eps_n, const Matrix& beta_m, int cluster_label,
                    const FitConfig& cfg, std::span<double> out);

/// Last accepted step per coordinate block, reused across sweeps.
struct BlockSteps {
    double mu = 1.0;
    double sigma = 1.0;
    double eps = 1.0;
    double delta = 1.0;
};

AscentReport ascend_mu_n(const ModelParams& params, VariationalState& vs, std::size_t n,
                         std::span<const double> votes, std::size_t n_classifiers,
                         const FitConfig& cfg = {}, double initial_step = 1.0);
AscentReport ascend_sigma_n2(const ModelParams& params, VariationalState& vs, std::size_t n,
                             std::size_t n_classifiers, const FitConfig& cfg = {},
                             double initial_step = 1.0);
AscentReport ascend_epsilon_n(const ModelParams& params, VariationalState& vs, std::size_t n,
                              std::span<const double> phi_mass, std::size_t n_clusterings,
                              const FitConfig& cfg = {}, double initial_step = 1.0);
AscentReport ascend_delta_n2(const ModelParams& params, VariationalState& vs, std::size_t n,
                             std::size_t n_clusterings, const FitConfig& cfg = {},
                             double initial_step = 1.0);

/// Steps 4-7 of a sweep for one object, given its label aggregates.
void ascend_object(const ModelParams& params, VariationalState& vs, std::size_t n,
                   std::span<const double> votes, std::size_t n_classifiers,
                   std::span<const double> phi_mass, std::size_t n_clusterings,
                   const FitConfig& cfg, BlockSteps& steps);

/// Per-object stopping rule of the E-step.
bool object_converged(double previous, double current, double rel_tol);

struct EStepReport {
    std::size_t max_sweeps_used = 0;
    std::size_t objects_converged = 0;
};

/// Sweeps kappa, xi, phi, mu_n, sigma_n2, eps_n, delta_n2 for every object
/// until its bound contribution changes by less than estep_rel_tol (relative)
/// or estep_max_sweeps is reached. Objects are processed independently.
EStepReport e_step(const LabelObservations& w, const ModelParams& params, VariationalState& vs,
                   const FitConfig& cfg = {});

// ---------------------------------------------------------------------------
// M-step. Each quantity is a sum over objects; the partial_* functions
// compute it over a subset so that sites can ship partial sums.

std::vector<ExactSum> partial_mu(const VariationalState& vs, std::span<const std::size_t> objects);
std::vector<double> finalize_mu(const std::vector<ExactSum>& sums, std::size_t n_objects);

ExactSum partial_delta2(const VariationalState& vs, std::span<const std::size_t> objects);
double finalize_delta2(const ExactSum& sum, std::size_t n_objects, std::size_t n_classes);

/// sum_n [sigma_n2_ni + (mu_n_ni - mu_i)^2] per class.
std::vector<ExactSum> partial_sigma2_spread(const VariationalState& vs, std::span<const double> mu,
                                            std::span<const std::size_t> objects);
std::vector<double> finalize_sigma2(const std::vector<ExactSum>& spread, std::size_t n_objects);

/// Row-major k x k_m table of sum_n phi_nmi [label_nm = j].
std::vector<ExactSum> partial_beta(const Matrix& phi_m, std::span<const int> labels_m,
                                   std::size_t n_clusters, std::span<const std::size_t> objects);
Matrix finalize_beta(const std::vector<ExactSum>& counts, std::size_t n_classes,
                     std::size_t n_clusters, double floor);

std::vector<double> mstep_mu(const VariationalState& vs);
std::vector<Matrix> mstep_beta(const LabelObservations& w, const VariationalState& vs,
                               std::span<const std::size_t> clusters_per_clustering,
                               double beta_floor = 1e-12);
double mstep_delta2(const VariationalState& vs);
std::vector<double> mstep_sigma2(const VariationalState& vs, std::span<const double> mu);

/// Parameter updates in order: mu, delta2, beta, sigma2.
void m_step(const LabelObservations& w, const ProblemShape& shape, const VariationalState& vs,
            ModelParams& params, const FitConfig& cfg = {});

// ---------------------------------------------------------------------------

/// Alternates e_step and m_step until the relative change of the bound drops
/// below outer_rel_tol or outer_max_iter is reached. Deterministic in cfg.seed.
FitResult fit(const LabelObservations& w, const ProblemShape& shape, const FitConfig& cfg = {});

/// Multiplicity-over-Taylor-point weights for the y- and theta-blocks under
/// the configured objective form.
double y_block_weight(const VariationalState& vs, std::size_t n, std::size_t n_classifiers,
                      ObjectiveForm form);
double theta_block_weight(const VariationalState& vs, std::size_t n, std::size_t n_clusterings,
                          ObjectiveForm form);

}  // namespace cvem
