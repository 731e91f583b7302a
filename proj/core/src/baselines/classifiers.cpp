#include "consensus_vem/baselines/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "consensus_vem/errors.hpp"
#include "consensus_vem/model.hpp"
#include "consensus_vem/softmax.hpp"

namespace cvem::baselines {

namespace {

void require_all_classes(const Dataset2D& train) {
    std::vector<std::size_t> counts(train.n_classes, 0);
    for (int y : train.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= train.n_classes) {
            throw InvalidArgument("training label out of range");
        }
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw InvalidArgument("class " + std::to_string(c + 1) + " has no training point");
    }
}

int majority(const std::vector<std::size_t>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct SubsetSplit {
    DepthTwoTree::Split split;
    std::size_t errors = 0;
};

// Best single split (or a leaf) of the points in `idx` by training errors.
SubsetSplit best_split(const Dataset2D& d, const std::vector<std::size_t>& idx) {
    const std::size_t k = d.n_classes;
    std::vector<std::size_t> total(k, 0);
    for (std::size_t i : idx) ++total[static_cast<std::size_t>(d.labels[i])];
    SubsetSplit best;
    best.split.left = best.split.right = majority(total);
    best.errors = idx.size() - total[static_cast<std::size_t>(best.split.left)];

    for (int f = 0; f < 2; ++f) {
        std::vector<std::size_t> order = idx;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return d.points(a, static_cast<std::size_t>(f)) < d.points(b, static_cast<std::size_t>(f));
        });
        std::vector<std::size_t> left(k, 0);
        for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
            ++left[static_cast<std::size_t>(d.labels[order[pos]])];
            const double a = d.points(order[pos], static_cast<std::size_t>(f));
            const double b = d.points(order[pos + 1], static_cast<std::size_t>(f));
            if (!(a < b)) continue;
            std::vector<std::size_t> right(k);
            for (std::size_t c = 0; c < k; ++c) right[c] = total[c] - left[c];
            const int lc = majority(left);
            const int rc = majority(right);
            const std::size_t errors = (pos + 1 - left[static_cast<std::size_t>(lc)]) +
                                       (order.size() - pos - 1 - right[static_cast<std::size_t>(rc)]);
            if (errors < best.errors) {
                best.errors = errors;
                best.split = {f, 0.5 * (a + b), lc, rc};
            }
        }
    }
    return best;
}

}  // namespace

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::Logistic: return "logistic";
        case LearnerKind::NearestCentroid: return "centroid";
        case LearnerKind::Tree: return "tree";
    }
    return "?";
}

LearnerKind parse_learner(const std::string& name) {
    if (name == "logistic") return LearnerKind::Logistic;
    if (name == "centroid") return LearnerKind::NearestCentroid;
    if (name == "tree") return LearnerKind::Tree;
    throw InvalidArgument("unknown learner: " + name);
}

std::vector<int> Classifier::predict_all(const Matrix& points) const {
    std::vector<int> out(points.rows());
    for (std::size_t n = 0; n < points.rows(); ++n) out[n] = predict(points(n, 0), points(n, 1));
    return out;
}

LogisticRegression::LogisticRegression(const Dataset2D& train, std::size_t iterations, double rate)
    : k_(train.n_classes), w_(train.n_classes * 3, 0.0) {
    require_all_classes(train);
    const std::size_t n = train.size();
    for (std::size_t i = 0; i < n; ++i) {
        cx_ += train.points(i, 0);
        cy_ += train.points(i, 1);
    }
    cx_ /= static_cast<double>(n);
    cy_ /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var += std::pow(train.points(i, 0) - cx_, 2) + std::pow(train.points(i, 1) - cy_, 2);
    }
    scale_ = var > 0.0 ? std::sqrt(var / (2.0 * static_cast<double>(n))) : 1.0;

    std::vector<double> grad(w_.size());
    std::vector<double> logits(k_), prob(k_);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double f[3] = {1.0, (train.points(i, 0) - cx_) / scale_, (train.points(i, 1) - cy_) / scale_};
            for (std::size_t c = 0; c < k_; ++c) {
                logits[c] = w_[c * 3] * f[0] + w_[c * 3 + 1] * f[1] + w_[c * 3 + 2] * f[2];
            }
            softmax_into(logits, prob);
            for (std::size_t c = 0; c < k_; ++c) {
                const double r = prob[c] - (train.labels[i] == static_cast<int>(c) ? 1.0 : 0.0);
                for (std::size_t j = 0; j < 3; ++j) grad[c * 3 + j] += r * f[j];
            }
        }
        for (std::size_t j = 0; j < w_.size(); ++j) w_[j] -= rate * grad[j] / static_cast<double>(n);
    }
}

int LogisticRegression::predict(double x, double y) const {
    const double fx = (x - cx_) / scale_;
    const double fy = (y - cy_) / scale_;
    std::vector<double> logits(k_);
    for (std::size_t c = 0; c < k_; ++c) logits[c] = w_[c * 3] + w_[c * 3 + 1] * fx + w_[c * 3 + 2] * fy;
    return static_cast<int>(argmax(logits));
}

NearestCentroid::NearestCentroid(const Dataset2D& train) : centroids_(train.n_classes, 2) {
    require_all_classes(train);
    std::vector<std::size_t> counts(train.n_classes, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto c = static_cast<std::size_t>(train.labels[i]);
        ++counts[c];
        centroids_(c, 0) += train.points(i, 0);
        centroids_(c, 1) += train.points(i, 1);
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        centroids_(c, 0) /= static_cast<double>(counts[c]);
        centroids_(c, 1) /= static_cast<double>(counts[c]);
    }
}

int NearestCentroid::predict(double x, double y) const {
    int best = 0;
    double best_d = HUGE_VAL;
    for (std::size_t c = 0; c < centroids_.rows(); ++c) {
        const double d = std::pow(x - centroids_(c, 0), 2) + std::pow(y - centroids_(c, 1), 2);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

DepthTwoTree::DepthTwoTree(const Dataset2D& train) {
    require_all_classes(train);
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    // Depth 1 alone, as a baseline the two-level search must beat.
    SubsetSplit stump = best_split(train, all);
    std::size_t best_errors = stump.errors;
    root_ = stump.split;
    children_[0] = {-1, 0.0, root_.left, root_.left};
    children_[1] = {-1, 0.0, root_.right, root_.right};

    for (int f = 0; f < 2; ++f) {
        const auto fu = static_cast<std::size_t>(f);
        std::vector<std::size_t> order = all;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return train.points(a, fu) < train.points(b, fu); });
        for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
            const double a = train.points(order[pos], fu);
            const double b = train.points(order[pos + 1], fu);
            if (!(a < b)) continue;
            const std::vector<std::size_t> lo(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos + 1));
            const std::vector<std::size_t> hi(order.begin() + static_cast<std::ptrdiff_t>(pos + 1), order.end());
            const SubsetSplit l = best_split(train, lo);
            const SubsetSplit r = best_split(train, hi);
            if (l.errors + r.errors < best_errors) {
                best_errors = l.errors + r.errors;
                root_ = {f, 0.5 * (a + b), 0, 0};
                children_[0] = l.split;
                children_[1] = r.split;
            }
        }
    }
}

int DepthTwoTree::predict(double x, double y) const {
    const double v[2] = {x, y};
    if (root_.feature < 0) return root_.left;
    const Split& child = children_[v[root_.feature] <= root_.threshold ? 0 : 1];
    if (child.feature < 0) return child.left;
    return v[child.feature] <= child.threshold ? child.left : child.right;
}

std::vector<std::unique_ptr<Classifier>> train_weak_classifiers(const Dataset2D& train,
                                                                std::span<const LearnerKind> kinds) {
    std::vector<std::unique_ptr<Classifier>> out;
    for (LearnerKind kind : kinds) {
        switch (kind) {
            case LearnerKind::Logistic: out.push_back(std::make_unique<LogisticRegression>(train)); break;
            case LearnerKind::NearestCentroid: out.push_back(std::make_unique<NearestCentroid>(train)); break;
            case LearnerKind::Tree: out.push_back(std::make_unique<DepthTwoTree>(train)); break;
        }
    }
    return out;
}

}  // namespace cvem::baselines
