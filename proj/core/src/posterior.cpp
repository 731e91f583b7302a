#include "consensus_vem/posterior.hpp"

#include "consensus_vem/softmax.hpp"

namespace cvem {

PosteriorResult posterior_from_state(const VariationalState& vs) {
    PosteriorResult result;
    result.class_posteriors = Matrix(vs.n_objects(), vs.n_classes());
    result.hard_labels.resize(vs.n_objects());
    for (std::size_t n = 0; n < vs.n_objects(); ++n) {
        softmax_into(vs.mu_n.row(n), result.class_posteriors.row(n));
        result.hard_labels[n] = static_cast<int>(argmax(result.class_posteriors.row(n)));
    }
    return result;
}

}  // namespace cvem
