#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "consensus_vem/inference.hpp"

namespace cvem::dist {

struct RunSummary {
    PosteriorResult posterior;
    std::vector<double> elbo_trace;
    double delta2 = 0.0;
    std::vector<Matrix> beta;

    static RunSummary of(const FitResult& fit);
};

struct EquivalenceReport {
    double max_posterior_diff = 0.0;   // absolute
    double max_trace_rel_diff = 0.0;
    double delta2_rel_diff = 0.0;
    double max_beta_diff = 0.0;        // absolute
    /// First outer iteration whose bound differs by more than tol, or where
    /// one trace ends before the other.
    std::optional<std::size_t> first_trace_divergence;
    /// First object whose posterior row differs by more than tol.
    std::optional<std::size_t> first_object_divergence;
    bool passed = false;

    std::string describe() const;
};

/// Throws InvalidArgument when posterior or beta shapes differ.
EquivalenceReport verify_equivalence(const RunSummary& central, const RunSummary& distributed,
                                     double tol);

}  // namespace cvem::dist
