#include "consensus_vem/baselines/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "consensus_vem/baselines/kmeans.hpp"
#include "consensus_vem/errors.hpp"
#include "consensus_vem/parallel.hpp"
#include "consensus_vem/rng.hpp"

namespace cvem::baselines {

double ExperimentResult::mean_vote() const {
    double s = 0.0;
    for (const TrialResult& t : trials) s += t.vote_accuracy;
    return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

double ExperimentResult::mean_bc3e() const {
    double s = 0.0;
    for (const TrialResult& t : trials) s += t.bc3e_accuracy;
    return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

void ExperimentResult::write_csv(std::ostream& out) const {
    out << "trial,method,accuracy\n";
    const auto old = out.precision(17);
    for (const TrialResult& t : trials) {
        out << t.trial + 1 << ",vote," << t.vote_accuracy << '\n';
        out << t.trial + 1 << ",bc3e," << t.bc3e_accuracy << '\n';
    }
    out.precision(old);
}

std::vector<int> majority_vote(const LabelObservations& w, std::size_t n_classes) {
    const Matrix votes = vote_counts(w, n_classes);
    std::vector<int> out(votes.rows());
    for (std::size_t n = 0; n < votes.rows(); ++n) out[n] = static_cast<int>(argmax(votes.row(n)));
    return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) throw InvalidArgument("accuracy: size mismatch");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

TrialData prepare_trial(const Dataset2D& data, double pct_labeled, const ExperimentConfig& cfg,
                        std::uint64_t trial_seed) {
    if (!(pct_labeled > 0.0 && pct_labeled < 100.0)) {
        throw InvalidArgument("pct_labeled must lie strictly between 0 and 100");
    }
    const std::size_t k = data.n_classes;
    Rng rng(derive_seed(trial_seed, 1));

    TrialData t;
    std::vector<char> is_labelled(data.size(), 0);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.labels[i] == static_cast<int>(c)) members.push_back(i);
        }
        if (members.size() < 2) throw InvalidArgument("every class needs at least two points");
        std::size_t take = static_cast<std::size_t>(std::llround(pct_labeled / 100.0 * static_cast<double>(members.size())));
        take = std::clamp<std::size_t>(take, 1, members.size() - 1);
        for (std::size_t i = 0; i < take; ++i) {
            std::swap(members[i], members[i + rng.below(members.size() - i)]);
            is_labelled[members[i]] = 1;
        }
    }
    Dataset2D train;
    train.n_classes = k;
    Matrix target_points;
    for (std::size_t i = 0; i < data.size(); ++i) (is_labelled[i] ? t.labelled : t.target).push_back(i);
    train.points = Matrix(t.labelled.size(), 2);
    for (std::size_t j = 0; j < t.labelled.size(); ++j) {
        std::ranges::copy(data.points.row(t.labelled[j]), train.points.row(j).begin());
        train.labels.push_back(data.labels[t.labelled[j]]);
    }
    target_points = Matrix(t.target.size(), 2);
    for (std::size_t j = 0; j < t.target.size(); ++j) {
        std::ranges::copy(data.points.row(t.target[j]), target_points.row(j).begin());
        t.truth.push_back(data.labels[t.target[j]]);
    }

    std::vector<std::size_t> counts = cfg.cluster_counts;
    if (counts.empty()) counts = {k, k + 2, 2 * k, 2 * k + 4};

    const auto learners = train_weak_classifiers(train, cfg.learners);
    const std::size_t n = t.target.size();
    t.shape = {n, k, learners.size(), counts.size(), counts};
    t.w.class_labels = LabelMatrix(n, learners.size());
    t.w.cluster_labels = LabelMatrix(n, counts.size());
    for (std::size_t l = 0; l < learners.size(); ++l) {
        const std::vector<int> pred = learners[l]->predict_all(target_points);
        for (std::size_t i = 0; i < n; ++i) t.w.class_labels(i, l) = pred[i];
    }
    for (std::size_t m = 0; m < counts.size(); ++m) {
        const KMeansResult km = kmeans(target_points, counts[m], derive_seed(trial_seed, 2, m));
        for (std::size_t i = 0; i < n; ++i) t.w.cluster_labels(i, m) = km.labels[i];
    }
    return t;
}

ExperimentResult run_semi_supervised_experiment(const Dataset2D& data, double pct_labeled,
                                                std::size_t n_trials, const ExperimentConfig& cfg) {
    if (!(pct_labeled > 0.0 && pct_labeled < 100.0)) {
        throw InvalidArgument("pct_labeled must lie strictly between 0 and 100");
    }
    ExperimentResult result;
    result.trials.resize(n_trials);
    const std::size_t workers = worker_count(cfg.threads);
    parallel_for(n_trials, workers, [&](std::size_t trial) {
        const std::uint64_t seed = derive_seed(cfg.seed, trial);
        const TrialData t = prepare_trial(data, pct_labeled, cfg, seed);
        FitConfig fit_cfg = cfg.fit;
        fit_cfg.seed = seed;
        fit_cfg.threads = 1;
        const FitResult fitted = fit(t.w, t.shape, fit_cfg);
        TrialResult& r = result.trials[trial];
        r.trial = trial;
        r.vote_accuracy = accuracy(majority_vote(t.w, t.shape.n_classes), t.truth);
        r.bc3e_accuracy = accuracy(fitted.posterior.hard_labels, t.truth);
        r.outer_iterations = fitted.posterior.n_outer_iterations;
    });
    return result;
}

}  // namespace cvem::baselines
