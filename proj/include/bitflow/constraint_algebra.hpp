#pragma once

#include <Eigen/Core>

namespace bitflow {

/// Dense latent weight matrix of one layer (rows n_l, cols m_l).
using WeightMatrix = Eigen::MatrixXd;

/// Mean over all entries, accumulated with pairwise summation.
double layer_mean(const WeightMatrix& w);

/// W minus its layer mean; the orthogonal projection onto the zero-mean
/// hyperplane. Linear, self-adjoint, idempotent.
WeightMatrix zero_mean_project(const WeightMatrix& w);

/// W + c*1 for zero-mean W; an isometry from the zero-mean hyperplane onto
/// the mean-c hyperplane. Throws if the input mean exceeds 1e-12 * n * m.
WeightMatrix shift_isometry(const WeightMatrix& w, double c);

} // namespace bitflow
