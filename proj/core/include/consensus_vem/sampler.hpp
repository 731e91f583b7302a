#pragma once

#include <cstdint>
#include <utility>

#include "consensus_vem/model.hpp"

namespace cvem {

/// Draws observations from the generative model:
///   y_n ~ N(mu, diag sigma2), theta_n ~ N(y_n, delta2 I),
///   class label l ~ softmax(y_n) for each classifier,
///   z_nm ~ softmax(theta_n) and cluster label ~ beta[m] row z_nm for each clustering.
/// Deterministic in `seed`.
std::pair<LabelObservations, LatentTruth> sample_dataset(const ModelParams& params,
                                                         const ProblemShape& shape,
                                                         std::uint64_t seed);

}  // namespace cvem
