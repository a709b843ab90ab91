#include "bitflow/experiment.hpp"

#include "bitflow/bitnet_forward.hpp"
#include "bitflow/errors.hpp"
#include "bitflow/particle_dynamics.hpp"
#include "bitflow/reduction.hpp"
#include "bitflow/rng.hpp"

#include <cmath>

namespace bitflow {

namespace {

constexpr std::uint64_t kDataStream = 0xd5ea5eedc0ffee01ULL;
constexpr std::uint64_t kTeacherStream = 0x7eac4e12b00d5eedULL;

double clamp_to(double v, double r) {
    if (v > r) return r;
    if (v < -r) return -r;
    return v;
}

} // namespace

Dataset synthesize_dataset(const ExperimentConfig& cfg) {
    cfg.validate();
    const int d = cfg.dims.front().first;
    const int out_dim = cfg.dims.back().second;
    const double r = cfg.support;

    Dataset data;
    data.inputs.resize(cfg.samples, d);
    data.targets.resize(cfg.samples, out_dim);

    Rng rng(detail::splitmix64(cfg.seed ^ kDataStream));
    for (int i = 0; i < cfg.samples; ++i)
        for (int j = 0; j < d; ++j) data.inputs(i, j) = rng.uniform(-r, r);

    if (cfg.target_rule == "zero" || r == 0.0) {
        data.targets.setZero();
        return data;
    }

    if (cfg.target_rule == "teacher") {
        // Fixed teacher independent of the experiment architecture beyond
        // the input/output dims, so sweep cells sharing a seed share data.
        const Architecture teacher_arch = Architecture::mlp(d, {8}, out_dim);
        RunConfig init;
        init.seed = detail::splitmix64(cfg.seed ^ kTeacherStream);
        init.init_scale = 1.0;
        init.clamp = 1.0;
        const NetworkState teacher =
            init_weights(teacher_arch, SmoothingParams::create(0.5, 2, 0.25), init);
        for (int i = 0; i < cfg.samples; ++i) {
            const Eigen::VectorXd y =
                network_forward(data.inputs.row(i).transpose(), teacher).first;
            for (int k = 0; k < out_dim; ++k) data.targets(i, k) = clamp_to(y[k], r);
        }
        return data;
    }

    for (int i = 0; i < cfg.samples; ++i) {
        const Eigen::VectorXd x = data.inputs.row(i).transpose();
        double v = 0.0;
        if (cfg.target_rule == "linear") {
            v = x.mean();
        } else if (cfg.target_rule == "sinsum") {
            v = r * std::sin(x.sum());
        }
        for (int k = 0; k < out_dim; ++k) data.targets(i, k) = clamp_to(v, r);
    }
    return data;
}

} // namespace bitflow
