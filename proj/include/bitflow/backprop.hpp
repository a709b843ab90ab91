#pragma once

#include "bitflow/bitnet_forward.hpp"
#include "bitflow/dataset.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace bitflow {

enum class LossKind { SquaredError };

/// Loss with its recorded regularity constants. l1 and l2 are the
/// effective gradient-growth and Hessian bounds on the data support and
/// clamped weight domain; for squared error l2 = 1 and l1 = max(1, R).
struct LossSpec {
    LossKind kind = LossKind::SquaredError;
    double l1 = 1.0;
    double l2 = 1.0;

    static LossSpec squared_error(double support_bound = 1.0);

    double value(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const;
    Eigen::VectorXd grad(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const;
};

struct RiskGradient {
    std::vector<WeightMatrix> layers;  // dR/dW^(l), shapes match the state
    double risk = 0.0;
};

/// Mean of loss(f_W(x), y) over the dataset (pairwise accumulation).
double risk(const NetworkState& s, const Dataset& data, const LossSpec& loss);

/// Exact reverse-mode gradient of the risk through every smooth quantizer,
/// reusing the forward trace. The dataset reduction is a pairwise tree over
/// sample indices, so the result is bit-stable.
RiskGradient risk_gradient(const NetworkState& s, const Dataset& data,
                           const LossSpec& loss);

/// Gradient of loss(f_W(x), y) for a single sample.
std::vector<WeightMatrix> sample_gradient(const NetworkState& s,
                                          const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& y,
                                          const LossSpec& loss);

struct GradientBoundReport {
    std::vector<double> max_abs_entry;  // per layer
    std::vector<double> ratio;          // max entry / (1 + mean |f_W(X)|)
    double mean_output_norm = 0.0;
    bool finite = true;
};

/// Per-layer sup-entry ratios against 1 + E|f_W(X)|.
GradientBoundReport gradient_bound_check(const RiskGradient& g,
                                         const NetworkState& s,
                                         const Dataset& data,
                                         const LossSpec& loss);

/// Max ratio per layer over `n_states` random clamped states; the fitted
/// constant of the gradient bound diagnostic.
std::vector<double> fit_gradient_bound_constant(
    const Architecture& arch, const SmoothingParams& p, const Dataset& data,
    const LossSpec& loss, int n_states, double m_star, std::uint64_t seed);

} // namespace bitflow
