#include "consensus_vem/objectives.hpp"

#include <cmath>
#include <vector>

namespace cvem {

namespace {

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

ObjectiveSpec mu_n_objective(const ModelParams& params, std::span<const double> eps_n,
                             std::span<const double> sigma_n2, std::span<const double> votes,
                             double exp_weight) {
    const std::size_t k = params.mu.size();
    auto mu = copy(params.mu);
    auto prior_prec = std::vector<double>(k);
    for (std::size_t i = 0; i < k; ++i) prior_prec[i] = 1.0 / params.sigma2[i];
    const double coupling_prec = 1.0 / params.delta2;
    auto eps = copy(eps_n);
    auto half_var = copy(sigma_n2);
    for (double& v : half_var) v *= 0.5;
    auto c = copy(votes);

    ObjectiveSpec spec;
    spec.dimension = k;
    spec.positivity_mask.assign(k, false);
    spec.eval = [=](std::span<const double> x) {
        double f = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = x[i] - mu[i];
            const double b = x[i] - eps[i];
            f += -0.5 * a * a * prior_prec[i] - 0.5 * b * b * coupling_prec + c[i] * x[i] -
                 exp_weight * std::exp(x[i] + half_var[i]);
        }
        return f;
    };
    spec.grad = [=](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < k; ++i) {
            g[i] = -(x[i] - mu[i]) * prior_prec[i] - (x[i] - eps[i]) * coupling_prec + c[i] -
                   exp_weight * std::exp(x[i] + half_var[i]);
        }
    };
    spec.curvature = [=](std::span<const double> x, std::span<double> h) {
        for (std::size_t i = 0; i < k; ++i) {
            h[i] = prior_prec[i] + coupling_prec + exp_weight * std::exp(x[i] + half_var[i]);
        }
    };
    return spec;
}

ObjectiveSpec sigma_n2_objective(const ModelParams& params, std::span<const double> mu_n,
                                 double exp_weight, double log_sign) {
    const std::size_t k = params.mu.size();
    std::vector<double> linear(k);
    for (std::size_t i = 0; i < k; ++i) linear[i] = 0.5 / params.sigma2[i] + 0.5 / params.delta2;
    auto mean = copy(mu_n);

    ObjectiveSpec spec;
    spec.dimension = k;
    spec.positivity_mask.assign(k, true);
    spec.eval = [=](std::span<const double> x) {
        double f = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            f += -linear[i] * x[i] + 0.5 * log_sign * std::log(x[i]) -
                 exp_weight * std::exp(mean[i] + 0.5 * x[i]);
        }
        return f;
    };
    spec.grad = [=](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < k; ++i) {
            g[i] = -linear[i] + 0.5 * log_sign / x[i] -
                   0.5 * exp_weight * std::exp(mean[i] + 0.5 * x[i]);
        }
    };
    spec.curvature = [=](std::span<const double> x, std::span<double> h) {
        for (std::size_t i = 0; i < k; ++i) {
            h[i] = 0.5 * log_sign / (x[i] * x[i]) + 0.25 * exp_weight * std::exp(mean[i] + 0.5 * x[i]);
        }
    };
    return spec;
}

ObjectiveSpec eps_n_objective(const ModelParams& params, std::span<const double> mu_n,
                              std::span<const double> delta_n2, std::span<const double> phi_mass,
                              double exp_weight) {
    const std::size_t k = params.mu.size();
    const double coupling_prec = 1.0 / params.delta2;
    auto center = copy(mu_n);
    auto half_var = copy(delta_n2);
    for (double& v : half_var) v *= 0.5;
    auto mass = copy(phi_mass);
    if (mass.empty()) mass.assign(k, 0.0);

    ObjectiveSpec spec;
    spec.dimension = k;
    spec.positivity_mask.assign(k, false);
    spec.eval = [=](std::span<const double> x) {
        double f = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double b = x[i] - center[i];
            f += mass[i] * x[i] - exp_weight * std::exp(x[i] + half_var[i]) -
                 0.5 * b * b * coupling_prec;
        }
        return f;
    };
    spec.grad = [=](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < k; ++i) {
            g[i] = mass[i] - exp_weight * std::exp(x[i] + half_var[i]) -
                   (x[i] - center[i]) * coupling_prec;
        }
    };
    spec.curvature = [=](std::span<const double> x, std::span<double> h) {
        for (std::size_t i = 0; i < k; ++i) {
            h[i] = coupling_prec + exp_weight * std::exp(x[i] + half_var[i]);
        }
    };
    return spec;
}

ObjectiveSpec delta_n2_objective(const ModelParams& params, std::span<const double> eps_n,
                                 double exp_weight, double log_sign) {
    const std::size_t k = params.mu.size();
    const double linear = 0.5 / params.delta2;
    auto mean = copy(eps_n);

    ObjectiveSpec spec;
    spec.dimension = k;
    spec.positivity_mask.assign(k, true);
    spec.eval = [=](std::span<const double> x) {
        double f = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            f += -linear * x[i] + 0.5 * log_sign * std::log(x[i]) -
                 exp_weight * std::exp(mean[i] + 0.5 * x[i]);
        }
        return f;
    };
    spec.grad = [=](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < k; ++i) {
            g[i] = -linear + 0.5 * log_sign / x[i] - 0.5 * exp_weight * std::exp(mean[i] + 0.5 * x[i]);
        }
    };
    spec.curvature = [=](std::span<const double> x, std::span<double> h) {
        for (std::size_t i = 0; i < k; ++i) {
            h[i] = 0.5 * log_sign / (x[i] * x[i]) + 0.25 * exp_weight * std::exp(mean[i] + 0.5 * x[i]);
        }
    };
    return spec;
}

ObjectiveSpec sigma2_objective(std::span<const double> spread, std::size_t n_objects) {
    const std::size_t k = spread.size();
    auto s = copy(spread);
    const double half_n = 0.5 * static_cast<double>(n_objects);

    ObjectiveSpec spec;
    spec.dimension = k;
    spec.positivity_mask.assign(k, true);
    spec.eval = [=](std::span<const double> x) {
        double f = 0.0;
        for (std::size_t i = 0; i < k; ++i) f += -half_n * std::log(x[i]) - 0.5 * s[i] / x[i];
        return f;
    };
    spec.grad = [=](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < k; ++i) g[i] = -half_n / x[i] + 0.5 * s[i] / (x[i] * x[i]);
    };
    spec.curvature = [=](std::span<const double> x, std::span<double> h) {
        for (std::size_t i = 0; i < k; ++i) {
            h[i] = s[i] / (x[i] * x[i] * x[i]) - half_n / (x[i] * x[i]);
        }
    };
    return spec;
}

}  // namespace cvem
