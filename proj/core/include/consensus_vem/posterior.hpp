#pragma once

#include "consensus_vem/model.hpp"

namespace cvem {

/// Class posteriors softmax(mu_n) and their argmax labels. final_elbo and
/// n_outer_iterations are left for the caller to fill in.
PosteriorResult posterior_from_state(const VariationalState& vs);

}  // namespace cvem
