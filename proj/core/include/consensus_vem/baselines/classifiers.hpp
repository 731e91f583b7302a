#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "consensus_vem/baselines/datasets.hpp"

namespace cvem::baselines {

enum class LearnerKind { Logistic, NearestCentroid, Tree };

std::string to_string(LearnerKind kind);
LearnerKind parse_learner(const std::string& name);

class Classifier {
public:
    virtual ~Classifier() = default;
    /// 0-indexed class of a point.
    virtual int predict(double x, double y) const = 0;
    std::vector<int> predict_all(const Matrix& points) const;
};

/// Multinomial logistic regression on (1, x, y), full-batch gradient descent
/// from zero weights.
class LogisticRegression final : public Classifier {
public:
    LogisticRegression(const Dataset2D& train, std::size_t iterations = 2000, double rate = 0.5);
    int predict(double x, double y) const override;

private:
    std::size_t k_;
    std::vector<double> w_;  // k x 3
    double cx_ = 0.0, cy_ = 0.0, scale_ = 1.0;
};

class NearestCentroid final : public Classifier {
public:
    explicit NearestCentroid(const Dataset2D& train);
    int predict(double x, double y) const override;

private:
    Matrix centroids_;
};

/// Axis-aligned tree of depth at most 2, chosen by exhaustive search over
/// all root and child thresholds for the fewest training errors.
class DepthTwoTree final : public Classifier {
public:
    explicit DepthTwoTree(const Dataset2D& train);
    int predict(double x, double y) const override;

    struct Split {
        int feature = -1;  // -1: leaf
        double threshold = 0.0;
        int left = 0;   // class when value <= threshold (or the leaf class)
        int right = 0;
    };

private:
    Split root_;
    Split children_[2];
};

/// One trained predictor per entry of `kinds`. Throws InvalidArgument when a
/// class has no training point.
std::vector<std::unique_ptr<Classifier>> train_weak_classifiers(const Dataset2D& train,
                                                                std::span<const LearnerKind> kinds);

}  // namespace cvem::baselines
