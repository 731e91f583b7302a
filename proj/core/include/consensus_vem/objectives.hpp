#pragma once

#include <span>

#include "consensus_vem/model.hpp"
#include "consensus_vem/numopt.hpp"

namespace cvem {

// The five bound terms that have no closed-form maximizer, each as a
// standalone objective over one block of coordinates. `exp_weight` is the
// multiplicity over Taylor point ratio in front of the exponential term
// (r1 / kappa_n for the y-blocks, r2 / xi_n for the theta-blocks).
// `log_sign` is +1 for the entropy term of q and -1 for the sign as printed
// in the original update table (kept for comparison runs).

/// sum_i [ -(x_i - mu_i)^2 / 2 sigma2_i - (x_i - eps_i)^2 / 2 delta2 + votes_i x_i
///         - exp_weight exp(x_i + sigma_n2_i / 2) ]
ObjectiveSpec mu_n_objective(const ModelParams& params, std::span<const double> eps_n,
                             std::span<const double> sigma_n2, std::span<const double> votes,
                             double exp_weight);

/// sum_i [ -x_i / 2 sigma2_i + (log_sign / 2) log x_i - x_i / 2 delta2
///         - exp_weight exp(mu_n_i + x_i / 2) ],  x > 0
ObjectiveSpec sigma_n2_objective(const ModelParams& params, std::span<const double> mu_n,
                                 double exp_weight, double log_sign = 1.0);

/// sum_i [ phi_mass_i x_i - exp_weight exp(x_i + delta_n2_i / 2) - (x_i - mu_n_i)^2 / 2 delta2 ]
ObjectiveSpec eps_n_objective(const ModelParams& params, std::span<const double> mu_n,
                              std::span<const double> delta_n2, std::span<const double> phi_mass,
                              double exp_weight);

/// sum_i [ -x_i / 2 delta2 + (log_sign / 2) log x_i - exp_weight exp(eps_n_i + x_i / 2) ],  x > 0
ObjectiveSpec delta_n2_objective(const ModelParams& params, std::span<const double> eps_n,
                                 double exp_weight, double log_sign = 1.0);

/// -(N/2) sum_i log x_i - (1/2) sum_i spread_i / x_i,  x > 0, where
/// spread_i = sum_n [sigma_n2_ni + (mu_n_ni - mu_i)^2].
ObjectiveSpec sigma2_objective(std::span<const double> spread, std::size_t n_objects);

}  // namespace cvem
