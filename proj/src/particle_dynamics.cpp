#include "bitflow/particle_dynamics.hpp"

#include "bitflow/errors.hpp"
#include "bitflow/reduction.hpp"

#include <cmath>
#include <sstream>

namespace bitflow {

void RunConfig::validate() const {
    if (!(eta > 0.0)) throw DomainError("RunConfig: eta must be positive");
    if (!(horizon >= 0.0)) throw DomainError("RunConfig: horizon must be nonnegative");
    if (!(clamp > 0.0)) throw DomainError("RunConfig: clamp must be positive");
    if (!(init_scale >= 0.0 && init_scale <= clamp))
        throw DomainError("RunConfig: init scale must lie in [0, clamp]");
    if (stride < 1) throw DomainError("RunConfig: stride must be >= 1");
}

int RunConfig::step_count() const {
    return static_cast<int>(std::floor(horizon / eta * (1.0 + 1e-12)));
}

double ParticleTrajectory::velocity_sup() const {
    double sup = 0.0;
    for (const StepReport& r : steps)
        for (double v : r.max_row_speed)
            if (v > sup) sup = v;
    return sup;
}

double ParticleTrajectory::velocity_sup(int layer) const {
    double sup = 0.0;
    for (const StepReport& r : steps)
        if (r.max_row_speed[static_cast<std::size_t>(layer)] > sup)
            sup = r.max_row_speed[static_cast<std::size_t>(layer)];
    return sup;
}

NetworkState init_weights(const Architecture& arch, const SmoothingParams& p,
                          const RunConfig& cfg) {
    cfg.validate();
    arch.validate();
    NetworkState s;
    s.arch = arch;
    s.smoothing = p;
    for (std::size_t l = 0; l < arch.layers.size(); ++l) {
        const LayerSpec& spec = arch.layers[l];
        WeightMatrix w(spec.width, spec.fan_in);
        for (int i = 0; i < spec.width; ++i) {
            for (int j = 0; j < spec.fan_in; ++j) {
                std::uint64_t key = cfg.seed;
                key = detail::splitmix64(key ^ (static_cast<std::uint64_t>(l) + 1));
                key = detail::splitmix64(key ^ (static_cast<std::uint64_t>(i) + 1));
                key = detail::splitmix64(key ^ (static_cast<std::uint64_t>(j) + 1));
                const double u = detail::uniform01(key);
                w(i, j) = cfg.init_scale * (2.0 * u - 1.0);
            }
        }
        s.weights.push_back(std::move(w));
    }
    return s;
}

std::pair<NetworkState, StepReport> gd_step(const NetworkState& s,
                                            const Dataset& data,
                                            const LossSpec& loss,
                                            const RunConfig& cfg) {
    const RiskGradient grad = risk_gradient(s, data, loss);

    StepReport report;
    report.risk = grad.risk;
    NetworkState next = s;
    for (std::size_t l = 0; l < s.weights.size(); ++l) {
        const WeightMatrix& g = grad.layers[l];
        if (!g.allFinite()) {
            std::ostringstream msg;
            msg << "gd_step: non-finite gradient at layer " << (l + 1)
                << "; risk=" << grad.risk << ", |W|_inf="
                << s.weights[l].cwiseAbs().maxCoeff();
            throw NumericalError(msg.str());
        }
        report.mean_before.push_back(layer_mean(s.weights[l]));
        report.grad_mean.push_back(layer_mean(g));

        double max_row = 0.0;
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            const double norm = g.row(i).norm();
            if (norm > max_row) max_row = norm;
        }
        report.max_row_speed.push_back(max_row);

        WeightMatrix updated = s.weights[l] - cfg.eta * g;
        bool clipped = false;
        for (Eigen::Index k = 0; k < updated.size(); ++k) {
            double& v = updated.data()[k];
            if (v > cfg.clamp) {
                v = cfg.clamp;
                clipped = true;
            } else if (v < -cfg.clamp) {
                v = -cfg.clamp;
                clipped = true;
            }
        }
        report.layer_clipped.push_back(clipped ? 1 : 0);
        report.any_clipped = report.any_clipped || clipped;
        report.mean_after.push_back(layer_mean(updated));
        next.weights[l] = std::move(updated);
    }
    return {std::move(next), std::move(report)};
}

ParticleTrajectory run_trajectory(const Architecture& arch,
                                  const SmoothingParams& p,
                                  const Dataset& data, const LossSpec& loss,
                                  const RunConfig& cfg) {
    cfg.validate();
    ParticleTrajectory traj;
    traj.arch = arch;
    traj.smoothing = p;
    traj.config = cfg;

    NetworkState state = init_weights(arch, p, cfg);
    const int steps = cfg.step_count();

    auto record = [&](int step) {
        traj.times.push_back(static_cast<double>(step) * cfg.eta);
        traj.snapshot_steps.push_back(step);
        traj.snapshots.push_back(state.weights);
        std::vector<double> alpha;
        for (const auto& w : state.weights) alpha.push_back(layer_mean(w));
        traj.alphas.push_back(std::move(alpha));
    };

    record(0);
    for (int k = 0; k < steps; ++k) {
        auto [next, report] = gd_step(state, data, loss, cfg);
        state = std::move(next);
        traj.steps.push_back(std::move(report));
        const int done = k + 1;
        if (done % cfg.stride == 0 || done == steps) record(done);
    }
    return traj;
}

Eigen::VectorXd velocity_field(const NetworkState& s, int layer, int row,
                               const Dataset& data, const LossSpec& loss) {
    if (layer < 0 || layer >= static_cast<int>(s.weights.size()))
        throw ShapeError("velocity_field: layer index out of range");
    if (row < 0 || row >= s.weights[static_cast<std::size_t>(layer)].rows())
        throw ShapeError("velocity_field: row index out of range");
    const RiskGradient g = risk_gradient(s, data, loss);
    return -g.layers[static_cast<std::size_t>(layer)].row(row).transpose();
}

} // namespace bitflow
