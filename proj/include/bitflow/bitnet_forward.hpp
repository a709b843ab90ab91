#pragma once

#include "bitflow/constraint_algebra.hpp"
#include "bitflow/dataset.hpp"
#include "bitflow/quant_core.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace bitflow {

enum class ActivationKind { Tanh, Identity };

/// Componentwise activation with its recorded regularity constants:
/// lip bounds sigma', curvature bounds sigma'', affine bounds
/// |sigma(z)| <= affine * (1 + |z|).
struct Activation {
    ActivationKind kind = ActivationKind::Tanh;

    double apply(double z) const;
    double deriv(double z) const;

    double lip() const;       // C_l
    double curvature() const; // D_l
    double affine() const;    // A_l
};

struct LayerSpec {
    int fan_in = 0;   // m_l
    int width = 0;    // n_l
    ActivationKind activation = ActivationKind::Tanh;
};

struct Architecture {
    std::vector<LayerSpec> layers;

    int depth() const { return static_cast<int>(layers.size()); }
    int input_dim() const { return layers.front().fan_in; }
    int output_dim() const { return layers.back().width; }

    /// Throws ShapeError unless fan-ins chain (n_{l-1} == m_l) and all
    /// dimensions are positive.
    void validate() const;

    /// d -> hidden -> ... -> hidden -> 1 with the given hidden activation
    /// everywhere except an identity output is NOT implied: the final layer
    /// uses `output` (default Identity for regression readout).
    static Architecture mlp(int input_dim, const std::vector<int>& hidden,
                            int output_dim = 1,
                            ActivationKind hidden_act = ActivationKind::Tanh,
                            ActivationKind output_act = ActivationKind::Identity);

    /// Copy with every hidden width replaced by `width` (fan-ins re-chained).
    Architecture with_hidden_width(int width) const;
};

struct NetworkState {
    Architecture arch;
    std::vector<WeightMatrix> weights;  // weights[l] is n_l x m_l
    SmoothingParams smoothing;

    void validate() const;
};

/// Everything the backward pass reuses from one layer evaluation.
struct LayerTrace {
    Eigen::VectorXd input;          // h^{l-1}
    Eigen::VectorXd scaled_arg;     // input * Q_b / gamma (pre-clip)
    Eigen::VectorXd quant_input;    // Quant(h^{l-1})
    double gamma = 0.0;
    std::size_t gamma_argmax = 0;
    bool gamma_max_branch = false;  // true when |input|_inf >= eps
    WeightMatrix projected;         // P(W)
    WeightMatrix quant_weights;     // sgn_eps(P(W)), entries in (-1,1)
    double beta = 0.0;              // >= eps
    Eigen::VectorXd pre_activation; // beta * Wq * quant_input
    Eigen::VectorXd output;         // sigma(pre_activation)
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    const Eigen::VectorXd& output() const { return layers.back().output; }
};

/// Smooth L1-scale: mean of smooth_abs over the projected entries.
double beta_scale(const WeightMatrix& w, const SmoothingParams& p);

/// sgn_eps applied entrywise to the zero-mean projection of W.
WeightMatrix quantize_weights(const WeightMatrix& w, const SmoothingParams& p);

Eigen::VectorXd layer_forward(const Eigen::VectorXd& x, const WeightMatrix& w,
                              const SmoothingParams& p, const Activation& act);

/// Full recursion h^0 = x, h^l = sigma(beta * Wq * Quant(h^{l-1})).
std::pair<Eigen::VectorXd, ForwardTrace> network_forward(
    const Eigen::VectorXd& x, const NetworkState& s);

/// The closed-form recursive Lipschitz bound L^(L) evaluated from the
/// architecture constants, the smoothing parameters, and the weight clamp.
double forward_lipschitz_bound(const Architecture& arch,
                               const SmoothingParams& p, double m_star);

/// Max over sampled (x, W, W_hat) of |f_W(x) - f_What(x)| / sum_l |dW_l|_F.
/// Perturbations are uniform on the Frobenius sphere of the given radius;
/// pairs with vanishing denominator are skipped. Deterministic in the seed.
double estimate_forward_lipschitz(const NetworkState& s, const Dataset& data,
                                  int trials, std::uint64_t seed,
                                  double radius = 1e-4);

} // namespace bitflow
