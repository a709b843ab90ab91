#pragma once

#include "bitflow/backprop.hpp"
#include "bitflow/bitnet_forward.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace bitflow {

struct RunConfig {
    double eta = 0.05;        // step size
    double horizon = 1.0;     // T
    double clamp = 1.0;       // M_star, entrywise box radius
    double init_scale = 0.5;  // M, uniform init radius, <= clamp
    std::uint64_t seed = 1;
    int stride = 1;           // snapshot every `stride` steps

    void validate() const;

    /// Whole steps inside [0, horizon]: floor(horizon/eta) with a one-ulp
    /// guard so exact multiples are not lost to rounding. horizon < eta
    /// yields zero steps (only the initial snapshot exists).
    int step_count() const;
};

struct StepReport {
    std::vector<char> layer_clipped;
    bool any_clipped = false;
    std::vector<double> mean_before;     // Psi(W(k)) per layer
    std::vector<double> grad_mean;       // Psi(grad R) per layer
    std::vector<double> mean_after;      // Psi(W(k+1)) per layer
    std::vector<double> max_row_speed;   // max row 2-norm of grad, per layer
    double risk = 0.0;
};

struct ParticleTrajectory {
    Architecture arch;
    SmoothingParams smoothing;
    RunConfig config;

    std::vector<double> times;                           // snapshot times, increasing
    std::vector<std::vector<WeightMatrix>> snapshots;    // [snap][layer]
    std::vector<std::vector<double>> alphas;             // [snap][layer] means
    std::vector<int> snapshot_steps;                     // step index per snapshot
    std::vector<StepReport> steps;                       // one per gd step

    int snapshot_count() const { return static_cast<int>(times.size()); }
    int layer_count() const { return static_cast<int>(arch.layers.size()); }

    /// Max over steps (optionally one layer) of the max row gradient norm.
    double velocity_sup() const;
    double velocity_sup(int layer) const;
};

/// I.i.d. uniform [-M, M] entries from a counter-based generator keyed by
/// (seed, layer, row, col): identical seeds reproduce identical states, and
/// narrower layers are entrywise prefixes of wider ones.
NetworkState init_weights(const Architecture& arch, const SmoothingParams& p,
                          const RunConfig& cfg);

/// One projected gradient-descent step W <- clip(W - eta * grad R; +-M_star).
std::pair<NetworkState, StepReport> gd_step(const NetworkState& s,
                                            const Dataset& data,
                                            const LossSpec& loss,
                                            const RunConfig& cfg);

ParticleTrajectory run_trajectory(const Architecture& arch,
                                  const SmoothingParams& p,
                                  const Dataset& data, const LossSpec& loss,
                                  const RunConfig& cfg);

/// Negative risk gradient with respect to row `row` of layer `layer`; the
/// finite-width proxy for the mean-field velocity field.
Eigen::VectorXd velocity_field(const NetworkState& s, int layer, int row,
                               const Dataset& data, const LossSpec& loss);

} // namespace bitflow
