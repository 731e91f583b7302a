#include "consensus_vem/exact_sum.hpp"

#include <cmath>

namespace cvem {

ExactSum::ExactSum(std::vector<double> components) : partials_(std::move(components)) {}

void ExactSum::add(double x) {
    if (!std::isfinite(x)) {
        special_ += x;
        return;
    }
    std::size_t used = 0;
    for (double y : partials_) {
        if (std::abs(x) < std::abs(y)) std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) partials_[used++] = lo;
        x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
}

void ExactSum::merge(const ExactSum& other) {
    special_ += other.special_;
    for (double c : other.partials_) add(c);
}

double ExactSum::value() const {
    // Round-half-even correction from CPython's fsum.
    if (special_ != 0.0 || std::isnan(special_)) return special_;
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        const double yr = x - hi;
        if (y == yr) hi = x;
    }
    return hi;
}

double exact_sum(std::span<const double> values) {
    ExactSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

}  // namespace cvem
