#pragma once

#include <span>
#include <vector>

namespace cvem {

/// Softmax with max-subtraction. Throws InvalidArgument on non-finite input.
std::vector<double> softmax(std::span<const double> v);
void softmax_into(std::span<const double> v, std::span<double> out);

double log_sum_exp(std::span<const double> v);

/// Taylor point sum_i exp(mean_i + var_i / 2), accumulated around the largest
/// exponent so intermediate terms never overflow when the result fits.
double taylor_point(std::span<const double> mean, std::span<const double> var);

}  // namespace cvem
