#include "consensus_vem/sampler.hpp"

#include <cmath>

#include "consensus_vem/rng.hpp"
#include "consensus_vem/softmax.hpp"

namespace cvem {

std::pair<LabelObservations, LatentTruth> sample_dataset(const ModelParams& params,
                                                         const ProblemShape& shape,
                                                         std::uint64_t seed) {
    shape.validate();
    params.validate(shape);

    const std::size_t n_objects = shape.n_objects;
    const std::size_t k = shape.n_classes;
    LabelObservations w{LabelMatrix(n_objects, shape.n_classifiers),
                        LabelMatrix(n_objects, shape.n_clusterings)};
    LatentTruth truth{Matrix(n_objects, k), Matrix(n_objects, k),
                      LabelMatrix(n_objects, shape.n_clusterings)};

    Rng rng(seed);
    const double delta_sd = std::sqrt(params.delta2);
    std::vector<double> probs(k);
    for (std::size_t n = 0; n < n_objects; ++n) {
        auto y = truth.y.row(n);
        auto theta = truth.theta.row(n);
        for (std::size_t i = 0; i < k; ++i) y[i] = rng.normal(params.mu[i], std::sqrt(params.sigma2[i]));
        for (std::size_t i = 0; i < k; ++i) theta[i] = rng.normal(y[i], delta_sd);

        softmax_into(y, probs);
        for (std::size_t l = 0; l < shape.n_classifiers; ++l) {
            w.class_labels(n, l) = static_cast<int>(rng.categorical(probs));
        }
        softmax_into(theta, probs);
        for (std::size_t m = 0; m < shape.n_clusterings; ++m) {
            const std::size_t z = rng.categorical(probs);
            truth.z(n, m) = static_cast<int>(z);
            w.cluster_labels(n, m) = static_cast<int>(rng.categorical(params.beta[m].row(z)));
        }
    }
    return {std::move(w), std::move(truth)};
}

}  // namespace cvem
