#pragma once

#include <Eigen/Core>

namespace bitflow {

/// Sample pairs (X, Y) with compact support: every entry of both matrices
/// is bounded by the configured support radius. One sample per row.
struct Dataset {
    Eigen::MatrixXd inputs;   // N x d
    Eigen::MatrixXd targets;  // N x n_L

    int size() const { return static_cast<int>(inputs.rows()); }
    int input_dim() const { return static_cast<int>(inputs.cols()); }
    int target_dim() const { return static_cast<int>(targets.cols()); }
};

} // namespace bitflow
