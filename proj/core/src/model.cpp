#include "consensus_vem/model.hpp"

#include <cmath>
#include <string>

#include "consensus_vem/errors.hpp"

namespace cvem {

namespace {

constexpr double kSimplexTolerance = 1e-9;

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

void require_state(bool ok, const std::string& what) {
    if (!ok) throw InvalidState(what);
}

bool on_simplex(std::span<const double> row) {
    double total = 0.0;
    for (double p : row) {
        if (!(p >= 0.0)) return false;
        total += p;
    }
    return std::abs(total - 1.0) <= kSimplexTolerance;
}

}  // namespace

void ProblemShape::validate() const {
    require(n_objects >= 1, "problem shape: need at least one object");
    require(n_classes >= 2, "problem shape: need at least two classes");
    require(n_classifiers + n_clusterings >= 1,
            "problem shape: need at least one classifier or clustering");
    require(clusters_per_clustering.size() == n_clusterings,
            "problem shape: clusters_per_clustering must have one entry per clustering");
    for (std::size_t km : clusters_per_clustering) {
        require(km >= 1, "problem shape: every clustering needs at least one cluster");
    }
}

void LabelObservations::validate(const ProblemShape& shape) const {
    shape.validate();
    require(class_labels.rows() == shape.n_objects && class_labels.cols() == shape.n_classifiers,
            "labels: class label matrix does not match the problem shape");
    require(cluster_labels.rows() == shape.n_objects &&
                cluster_labels.cols() == shape.n_clusterings,
            "labels: cluster label matrix does not match the problem shape");
    for (int label : class_labels.data()) {
        require(label >= 0 && static_cast<std::size_t>(label) < shape.n_classes,
                "labels: class label out of range");
    }
    for (std::size_t n = 0; n < shape.n_objects; ++n) {
        for (std::size_t m = 0; m < shape.n_clusterings; ++m) {
            const int label = cluster_labels(n, m);
            require(label >= 0 &&
                        static_cast<std::size_t>(label) < shape.clusters_per_clustering[m],
                    "labels: cluster label out of range in clustering " + std::to_string(m + 1));
        }
    }
}

void ModelParams::validate(const ProblemShape& shape) const {
    const std::size_t k = shape.n_classes;
    require(mu.size() == k && sigma2.size() == k, "model: mu/sigma2 length must equal k");
    for (double s : sigma2) require(s > 0.0, "model: sigma2 entries must be positive");
    require(delta2 > 0.0, "model: delta2 must be positive");
    require(beta.size() == shape.n_clusterings, "model: need one beta matrix per clustering");
    for (std::size_t m = 0; m < beta.size(); ++m) {
        require(beta[m].rows() == k && beta[m].cols() == shape.clusters_per_clustering[m],
                "model: beta matrix " + std::to_string(m + 1) + " has the wrong shape");
        for (std::size_t i = 0; i < k; ++i) {
            require(on_simplex(beta[m].row(i)), "model: beta rows must be on the simplex");
        }
    }
}

VariationalState::VariationalState(std::size_t n_objects, std::size_t n_classes,
                                   std::size_t n_clusterings)
    : mu_n(n_objects, n_classes),
      sigma_n2(n_objects, n_classes, 1.0),
      eps_n(n_objects, n_classes),
      delta_n2(n_objects, n_classes, 1.0),
      phi(n_clusterings, Matrix(n_objects, n_classes, 1.0 / static_cast<double>(n_classes))),
      kappa(n_objects, 1.0),
      xi(n_objects, 1.0) {}

void VariationalState::validate() const {
    const std::size_t n = n_objects();
    const std::size_t k = n_classes();
    require_state(sigma_n2.rows() == n && eps_n.rows() == n && delta_n2.rows() == n &&
                      kappa.size() == n && xi.size() == n,
                  "variational state: inconsistent object counts");
    require_state(sigma_n2.cols() == k && eps_n.cols() == k && delta_n2.cols() == k,
                  "variational state: inconsistent class counts");
    for (double v : sigma_n2.data()) require_state(v > 0.0, "variational state: sigma_n2 <= 0");
    for (double v : delta_n2.data()) require_state(v > 0.0, "variational state: delta_n2 <= 0");
    for (double v : kappa) require_state(v > 0.0, "variational state: kappa <= 0");
    for (double v : xi) require_state(v > 0.0, "variational state: xi <= 0");
    for (const Matrix& p : phi) {
        require_state(p.rows() == n && p.cols() == k, "variational state: phi has wrong shape");
        for (std::size_t r = 0; r < n; ++r) {
            require_state(on_simplex(p.row(r)), "variational state: phi row off the simplex");
        }
    }
}

Matrix vote_counts(const LabelObservations& w, std::size_t n_classes) {
    Matrix counts(w.class_labels.rows(), n_classes);
    for (std::size_t n = 0; n < w.class_labels.rows(); ++n) {
        for (int label : w.class_labels.row(n)) counts(n, static_cast<std::size_t>(label)) += 1.0;
    }
    return counts;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace cvem
