#include "bitflow/constraint_algebra.hpp"

#include "bitflow/errors.hpp"
#include "bitflow/reduction.hpp"

#include <cmath>

namespace bitflow {

double layer_mean(const WeightMatrix& w) {
    if (w.size() == 0) throw ShapeError("layer_mean: empty matrix");
    return pairwise_sum(w) / static_cast<double>(w.size());
}

WeightMatrix zero_mean_project(const WeightMatrix& w) {
    return w.array() - layer_mean(w);
}

WeightMatrix shift_isometry(const WeightMatrix& w, double c) {
    const double mean = layer_mean(w);
    const double tol = 1e-12 * static_cast<double>(w.size());
    if (std::abs(mean) > tol)
        throw DomainError("shift_isometry: input must have zero layer mean");
    return w.array() + c;
}

} // namespace bitflow
