#pragma once

#include <span>
#include <vector>

namespace cvem {

/// Exact floating-point accumulator (Shewchuk's non-overlapping expansions,
/// as in Python's math.fsum). value() is the correctly rounded exact sum, so
/// the result does not depend on the order of add()/merge() calls. Reductions
/// over objects use it so that a sum split into per-site partial sums and
/// recombined matches the single-site sum bit for bit.
class ExactSum {
public:
    ExactSum() = default;
    explicit ExactSum(std::vector<double> components);

    void add(double x);
    void merge(const ExactSum& other);
    ExactSum& operator+=(double x) {
        add(x);
        return *this;
    }

    double value() const;
    /// Non-overlapping components in increasing magnitude.
    const std::vector<double>& components() const noexcept { return partials_; }

private:
    std::vector<double> partials_;
    double special_ = 0.0;  // running sum of non-finite inputs
};

double exact_sum(std::span<const double> values);

}  // namespace cvem
