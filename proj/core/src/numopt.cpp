#include "consensus_vem/numopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "consensus_vem/errors.hpp"

namespace cvem {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-20;
constexpr double kMaxPlainStep = 1e12;

// Maps between the caller's coordinates x and the optimizer's coordinates z
// (z = log x on masked coordinates).
struct Coordinates {
    const std::vector<bool>& mask;

    bool positive(std::size_t i) const { return i < mask.size() && mask[i]; }

    void to_x(std::span<const double> z, std::span<double> x) const {
        for (std::size_t i = 0; i < z.size(); ++i) x[i] = positive(i) ? std::exp(z[i]) : z[i];
    }
};

}  // namespace

AscentReport maximize(const ObjectiveSpec& obj, std::span<const double> x0,
                      const AscentOptions& options) {
    const std::size_t d = obj.dimension;
    if (x0.size() != d) throw InvalidArgument("maximize: x0 has the wrong dimension");
    if (!(options.rel_tol > 0.0)) throw InvalidArgument("maximize: rel_tol must be positive");
    const Coordinates coords{obj.positivity_mask};
    for (std::size_t i = 0; i < d; ++i) {
        if (coords.positive(i) && !(x0[i] > 0.0)) {
            throw InvalidArgument("maximize: x0 violates the positivity mask");
        }
    }

    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) z[i] = coords.positive(i) ? std::log(x[i]) : x[i];

    double value = obj.eval(x);
    if (!std::isfinite(value)) {
        throw NumericalFailure("maximize: objective is not finite at the starting point", x);
    }

    const bool scaled = static_cast<bool>(obj.curvature);
    const double max_step = scaled ? 1.0 : kMaxPlainStep;
    double step = std::min(options.initial_step > 0.0 ? options.initial_step : 1.0, max_step);

    std::vector<double> gx(d), curv(d), dir(d), z_trial(d), x_trial(d);
    AscentReport report;
    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        obj.grad(x, gx);
        if (scaled) obj.curvature(x, curv);

        // Gradient and scaled direction in z-coordinates.
        double slope = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double g = gx[i];
            double h = scaled ? curv[i] : 1.0;
            if (coords.positive(i)) {
                g *= x[i];
                if (scaled) {
                    // -d2/du2 f(exp u) = x^2 c_x - x g_x
                    const double hu = x[i] * x[i] * curv[i] - x[i] * gx[i];
                    h = hu > 0.0 ? hu : x[i] * x[i] * curv[i] + std::abs(x[i] * gx[i]);
                }
            }
            if (!(h > 0.0) || !std::isfinite(h)) h = 1.0;
            dir[i] = g / h;
            slope += g * dir[i];
        }
        if (!std::isfinite(slope)) {
            throw NumericalFailure("maximize: non-finite gradient", x);
        }
        if (slope == 0.0) {
            report.converged = true;
            report.n_iterations = iter;
            break;
        }

        bool accepted = false;
        bool any_finite = false;
        double trial_value = value;
        double t = step;
        while (t >= kMinStep) {
            for (std::size_t i = 0; i < d; ++i) z_trial[i] = z[i] + t * dir[i];
            coords.to_x(z_trial, x_trial);
            trial_value = obj.eval(x_trial);
            if (std::isfinite(trial_value)) {
                any_finite = true;
                if (trial_value >= value + kArmijo * t * slope) {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        report.n_iterations = iter + 1;
        if (!accepted) {
            if (!any_finite) {
                throw NumericalFailure("maximize: objective not finite along the ascent direction", x);
            }
            // No step gives sufficient increase: stationary to working precision.
            report.converged = true;
            break;
        }

        const double change = trial_value - value;
        z.swap(z_trial);
        x.swap(x_trial);
        value = trial_value;
        step = std::min(2.0 * t, max_step);
        if (change <= options.rel_tol * std::max(std::abs(value), 1.0)) {
            report.converged = true;
            break;
        }
    }

    report.argmax = std::move(x);
    report.value = value;
    report.last_step = step;
    return report;
}

double grad_check(const ObjectiveSpec& obj, std::span<const double> x, double h) {
    const std::size_t d = obj.dimension;
    std::vector<double> g(d);
    obj.grad(x, g);
    std::vector<double> probe(x.begin(), x.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        probe[i] = x[i] + h;
        const double up = obj.eval(probe);
        probe[i] = x[i] - h;
        const double down = obj.eval(probe);
        probe[i] = x[i];
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(g[i] - numeric) / (std::abs(g[i]) + 1e-8));
    }
    return worst;
}

}  // namespace cvem
