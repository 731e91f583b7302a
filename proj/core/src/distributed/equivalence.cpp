#include "consensus_vem/distributed/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "consensus_vem/errors.hpp"

namespace cvem::dist {

namespace {

double rel_diff(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

RunSummary RunSummary::of(const FitResult& fit) {
    return {fit.posterior, fit.elbo_trace, fit.params.delta2, fit.params.beta};
}

std::string EquivalenceReport::describe() const {
    std::ostringstream out;
    out << (passed ? "equivalent" : "diverged") << ": posterior " << max_posterior_diff
        << ", bound trace " << max_trace_rel_diff << " (rel), delta2 " << delta2_rel_diff
        << " (rel), beta " << max_beta_diff;
    if (first_trace_divergence) out << "; trace diverges at iteration " << *first_trace_divergence + 1;
    if (first_object_divergence) out << "; first differing object " << *first_object_divergence;
    return out.str();
}

EquivalenceReport verify_equivalence(const RunSummary& central, const RunSummary& distributed,
                                     double tol) {
    const Matrix& a = central.posterior.class_posteriors;
    const Matrix& b = distributed.posterior.class_posteriors;
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidArgument("verify_equivalence: posterior shapes differ");
    }
    if (central.beta.size() != distributed.beta.size()) {
        throw InvalidArgument("verify_equivalence: numbers of clusterings differ");
    }
    for (std::size_t m = 0; m < central.beta.size(); ++m) {
        if (central.beta[m].rows() != distributed.beta[m].rows() ||
            central.beta[m].cols() != distributed.beta[m].cols()) {
            throw InvalidArgument("verify_equivalence: beta shapes differ");
        }
    }

    EquivalenceReport r;
    for (std::size_t n = 0; n < a.rows(); ++n) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double d = std::abs(a(n, i) - b(n, i));
            r.max_posterior_diff = std::max(r.max_posterior_diff, d);
            if (d > tol && !r.first_object_divergence) r.first_object_divergence = n;
        }
    }
    const auto& ta = central.elbo_trace;
    const auto& tb = distributed.elbo_trace;
    for (std::size_t t = 0; t < std::min(ta.size(), tb.size()); ++t) {
        const double d = rel_diff(ta[t], tb[t]);
        r.max_trace_rel_diff = std::max(r.max_trace_rel_diff, d);
        if (d > tol && !r.first_trace_divergence) r.first_trace_divergence = t;
    }
    if (ta.size() != tb.size() && !r.first_trace_divergence) {
        r.first_trace_divergence = std::min(ta.size(), tb.size());
        r.max_trace_rel_diff = HUGE_VAL;
    }
    r.delta2_rel_diff = rel_diff(central.delta2, distributed.delta2);
    for (std::size_t m = 0; m < central.beta.size(); ++m) {
        const auto& x = central.beta[m].data();
        const auto& y = distributed.beta[m].data();
        for (std::size_t e = 0; e < x.size(); ++e) {
            r.max_beta_diff = std::max(r.max_beta_diff, std::abs(x[e] - y[e]));
        }
    }
    r.passed = r.max_posterior_diff <= tol && r.max_trace_rel_diff <= tol &&
               r.delta2_rel_diff <= tol && r.max_beta_diff <= tol;
    return r;
}

}  // namespace cvem::dist
