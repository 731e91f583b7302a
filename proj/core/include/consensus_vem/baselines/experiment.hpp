#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "consensus_vem/baselines/classifiers.hpp"
#include "consensus_vem/baselines/datasets.hpp"
#include "consensus_vem/inference.hpp"

namespace cvem::baselines {

struct ExperimentConfig {
    FitConfig fit{};
    std::vector<LearnerKind> learners{LearnerKind::Logistic, LearnerKind::NearestCentroid,
                                      LearnerKind::Tree};
    /// Clusters per k-means run; empty means {k, k + 2, 2k, 2k + 4}.
    std::vector<std::size_t> cluster_counts;
    std::uint64_t seed = 0;
    /// Trials run concurrently; 0 = decide from the environment.
    std::size_t threads = 0;
};

struct TrialResult {
    std::size_t trial = 0;
    double vote_accuracy = 0.0;
    double bc3e_accuracy = 0.0;
    std::size_t outer_iterations = 0;
};

struct ExperimentResult {
    std::vector<TrialResult> trials;

    double mean_vote() const;
    double mean_bc3e() const;
    /// Columns trial, method, accuracy; one row per (trial, method).
    void write_csv(std::ostream& out) const;
};

/// Labels, cluster ensemble and ensemble outputs of one trial.
struct TrialData {
    std::vector<std::size_t> labelled;
    std::vector<std::size_t> target;
    LabelObservations w;
    ProblemShape shape;
    std::vector<int> truth;  // target labels, 0-indexed
};

/// Stratified random split with max(1, round(pct/100 * class size)) labelled
/// points per class, weak classifiers on the labelled part, k-means runs on
/// the target part. Throws InvalidArgument unless 0 < pct_labeled < 100.
TrialData prepare_trial(const Dataset2D& data, double pct_labeled, const ExperimentConfig& cfg,
                        std::uint64_t trial_seed);

/// Majority vote over the classifier columns, ties to the lowest class.
std::vector<int> majority_vote(const LabelObservations& w, std::size_t n_classes);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Runs n_trials independent trials; trial t uses derive_seed(cfg.seed, t).
ExperimentResult run_semi_supervised_experiment(const Dataset2D& data, double pct_labeled,
                                                std::size_t n_trials, const ExperimentConfig& cfg);

}  // namespace cvem::baselines
