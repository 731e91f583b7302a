#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cvem {

/// A smooth objective to be maximized. Coordinates flagged in
/// positivity_mask are kept strictly positive by optimizing their logarithm.
struct ObjectiveSpec {
    using Eval = std::function<double(std::span<const double>)>;
    using Vector = std::function<void(std::span<const double>, std::span<double>)>;

    std::size_t dimension = 0;
    Eval eval;
    Vector grad;
    std::vector<bool> positivity_mask;
    /// Optional diagonal curvature -d2f/dx_i2 (positive near a maximum). When
    /// set, ascent directions are diagonally scaled; the line search is the
    /// same either way.
    Vector curvature;
};

struct AscentOptions {
    double rel_tol = 1e-8;
    std::size_t max_iter = 100;
    /// First trial step. Callers sweeping many similar objectives pass back
    /// AscentReport::last_step to warm start.
    double initial_step = 1.0;
};

struct AscentReport {
    std::vector<double> argmax;
    double value = 0.0;
    std::size_t n_iterations = 0;
    bool converged = false;
    double last_step = 1.0;
};

/// Gradient ascent with backtracking (step halving, Armijo factor 1e-4).
/// Accepted iterates have non-decreasing objective values; stops when the
/// relative change of an accepted step falls below rel_tol or after
/// max_iter iterations.
///
/// Throws InvalidArgument for an infeasible x0 or rel_tol <= 0 and
/// NumericalFailure (carrying the last feasible point) when the objective is
/// non-finite at x0 or nowhere finite along the search direction.
AscentReport maximize(const ObjectiveSpec& obj, std::span<const double> x0,
                      const AscentOptions& options = {});

inline AscentReport maximize(const ObjectiveSpec& obj, std::span<const double> x0, double rel_tol,
                             std::size_t max_iter) {
    return maximize(obj, x0, AscentOptions{rel_tol, max_iter, 1.0});
}

/// max_i |grad_i - central_difference_i| / (|grad_i| + 1e-8).
double grad_check(const ObjectiveSpec& obj, std::span<const double> x, double h);

}  // namespace cvem
