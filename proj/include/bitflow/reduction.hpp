#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>

namespace bitflow {

// Pairwise (tree) summation. The reduction tree depends only on the index
// range, so results are bit-identical across runs and worker counts.
double pairwise_sum(std::span<const double> xs);

double pairwise_sum(const Eigen::MatrixXd& m);

double pairwise_mean(std::span<const double> xs);

/// Neumaier-compensated dot product; error stays near one ulp of the
/// magnitude sum even for long vectors.
double compensated_dot(std::span<const double> a, std::span<const double> b);

double compensated_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

namespace detail {

/// SplitMix64 mixer; the basis of the counter-based entry RNG.
std::uint64_t splitmix64(std::uint64_t x);

/// Uniform double in [0,1) from the top 53 bits of a mixed counter.
double uniform01(std::uint64_t bits);

} // namespace detail
} // namespace bitflow
