#include "consensus_vem/softmax.hpp"

#include <algorithm>
#include <cmath>

#include "consensus_vem/errors.hpp"

namespace cvem {

void softmax_into(std::span<const double> v, std::span<double> out) {
    if (v.empty()) throw InvalidArgument("softmax: empty input");
    double top = v[0];
    for (double x : v) {
        if (!std::isfinite(x)) throw InvalidArgument("softmax: non-finite input");
        top = std::max(top, x);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - top);
        total += out[i];
    }
    for (double& p : out) p /= total;
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.size());
    softmax_into(v, out);
    return out;
}

double log_sum_exp(std::span<const double> v) {
    const double top = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double x : v) total += std::exp(x - top);
    return top + std::log(total);
}

double taylor_point(std::span<const double> mean, std::span<const double> var) {
    double top = mean[0] + 0.5 * var[0];
    for (std::size_t i = 1; i < mean.size(); ++i) top = std::max(top, mean[i] + 0.5 * var[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) total += std::exp(mean[i] + 0.5 * var[i] - top);
    return std::exp(top) * total;
}

}  // namespace cvem
