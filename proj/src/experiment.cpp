#include "bitflow/experiment.hpp"

#include "bitflow/backprop.hpp"
#include "bitflow/bitnet_forward.hpp"
#include "bitflow/constraint_algebra.hpp"
#include "bitflow/errors.hpp"
#include "bitflow/meanfield_analysis.hpp"
#include "bitflow/particle_dynamics.hpp"
#include "bitflow/quadrature.hpp"
#include "bitflow/quant_core.hpp"
#include "bitflow/reduction.hpp"
#include "bitflow/rng.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bitflow {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

NetworkState random_state(const Architecture& arch, const SmoothingParams& p,
                          double scale, Rng& rng) {
    NetworkState s;
    s.arch = arch;
    s.smoothing = p;
    for (const LayerSpec& spec : arch.layers) {
        WeightMatrix w(spec.width, spec.fan_in);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = rng.uniform(-scale, scale);
        s.weights.push_back(std::move(w));
    }
    return s;
}

std::vector<WeightMatrix> fd_risk_gradient(NetworkState s, const Dataset& data,
                                           const LossSpec& loss) {
    std::vector<WeightMatrix> grads;
    for (std::size_t l = 0; l < s.weights.size(); ++l) {
        WeightMatrix g(s.weights[l].rows(), s.weights[l].cols());
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            double& w = s.weights[l].data()[k];
            const double saved = w;
            const double h = 1e-6 * std::max(1.0, std::abs(saved));
            w = saved + h;
            const double r_plus = risk(s, data, loss);
            w = saved - h;
            const double r_minus = risk(s, data, loss);
            w = saved;
            g.data()[k] = (r_plus - r_minus) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

double max_gradient_disagreement(const std::vector<WeightMatrix>& analytic,
                                 const std::vector<WeightMatrix>& fd) {
    double worst = 0.0;
    for (std::size_t l = 0; l < analytic.size(); ++l) {
        for (Eigen::Index k = 0; k < analytic[l].size(); ++k) {
            const double a = analytic[l].data()[k];
            const double f = fd[l].data()[k];
            const double err = std::abs(a) < 1e-10
                                   ? std::abs(a - f) / 1e-3  // abs 1e-8 at scale 1e-5
                                   : std::abs(a - f) / std::abs(a);
            if (err > worst) worst = err;
        }
    }
    return worst;
}

struct SuiteCheck {
    SuiteResult result;

    explicit SuiteCheck(std::string name) { result.name = std::move(name); }

    void require(bool ok, const std::string& what) {
        if (!ok) {
            result.pass = false;
            if (!result.detail.empty()) result.detail += "; ";
            result.detail += what;
        }
    }
};

// ---------------------------------------------------------------------------
// Verify suites
// ---------------------------------------------------------------------------

SuiteResult suite_quadrature_identity(const ExperimentConfig&, ResultsWriter& results) {
    SuiteCheck s("quadrature_identity");
    for (double eps : {1.0, 0.5, 0.1, 0.05, 0.01}) {
        const auto q = integrate_against_sign_deriv([](double) { return 1.0; }, eps,
                                                    1.0, 1e-11);
        const double err = std::abs(q.value - 2.0);
        results.add("sign_deriv_mass_error", err, "measured", std::nullopt,
                    std::nullopt, eps);
        s.require(err <= 1e-8, "mass differs from 2 at eps=" + format_g17(eps));
    }
    return s.result;
}

SuiteResult suite_sign_deriv_envelope(const ExperimentConfig&, ResultsWriter& results) {
    SuiteCheck s("sign_deriv_envelope");
    double worst_ratio = 0.0;
    for (double eps : {1.0, 0.5, 0.1, 0.05, 0.01}) {
        for (int k = 1; k <= 240; ++k) {
            const double z = eps * (12.0 * k / 240.0);
            for (double signed_z : {z, -z}) {
                const double v = smooth_sign_deriv(signed_z, eps);
                const double envelope = 4.0 / eps * std::exp(-2.0 * std::abs(signed_z) / eps);
                s.require(v <= envelope * (1.0 + 1e-12), "envelope violated");
                s.require(v <= 1.0 / eps * (1.0 + 1e-12), "1/eps bound violated");
                if (envelope > 0 && v / envelope > worst_ratio) worst_ratio = v / envelope;
            }
        }
    }
    results.add("sign_deriv_envelope_max_ratio", worst_ratio, "measured");
    return s.result;
}

SuiteResult suite_bounded_integral(const ExperimentConfig&, ResultsWriter& results) {
    SuiteCheck s("bounded_integral");
    struct Probe {
        const char* name;
        std::function<double(double)> phi;
        double sup;
    };
    const std::vector<Probe> probes = {
        {"sin", [](double z) { return std::sin(z); }, 1.0},
        {"halfcos", [](double z) { return 0.5 * std::cos(3.0 * z); }, 0.5},
        {"step", [](double z) { return z > 0 ? 1.0 : -1.0; }, 1.0},
    };
    for (const Probe& probe : probes) {
        for (double eps : {1.0, 0.25, 0.05}) {
            const auto q = integrate_against_sign_deriv(probe.phi, eps, probe.sup, 1e-11);
            const double bound = 2.0 * probe.sup;
            results.add(std::string("bounded_integral_") + probe.name,
                        std::abs(q.value), "measured", std::nullopt, std::nullopt, eps);
            s.require(std::abs(q.value) <= bound * (1.0 + 1e-9) + q.error_bound,
                      std::string("|integral| exceeds 2M for ") + probe.name);
        }
    }
    return s.result;
}

SuiteResult suite_dirac_limit(const ExperimentConfig&, ResultsWriter& results) {
    SuiteCheck s("dirac_limit");
    const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
    const TestFunction gauss = TestFunction::gaussian_bump(zero1, 2.0);
    const TestFunction spline = TestFunction::spline_bump(zero1, 4.0);
    for (const auto* phi : {&gauss, &spline}) {
        const char* tag = phi->kind == TestFunction::Kind::GaussianBump
                              ? "gauss" : "spline";
        double prev = -1.0;
        double err = 0.0;
        for (int k = 0; k <= 6; ++k) {
            const double eps = std::pow(0.5, k);
            Eigen::VectorXd z1(1);
            const auto q = integrate_against_sign_deriv(
                [&](double z) {
                    Eigen::VectorXd v(1);
                    v[0] = z;
                    return phi->value(v);
                },
                eps, phi->amplitude, 1e-12);
            err = std::abs(q.value - 2.0 * phi->value(zero1));
            results.add(std::string("dirac_limit_error_") + tag, err, "measured",
                        std::nullopt, std::nullopt, eps);
            if (prev >= 0.0)
                s.require(err < prev, std::string("error not decreasing for ") + tag);
            prev = err;
        }
        s.require(err < 1e-4, std::string("final error above 1e-4 for ") + tag);
    }
    return s.result;
}

SuiteResult suite_sign_lipschitz(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("sign_lipschitz");
    Rng rng(cfg.seed ^ 0x11aa22bb33cc44ddULL);
    double worst = 0.0;
    for (double eps : {1.0, 0.1, 0.05}) {
        for (int k = 0; k < 2000; ++k) {
            const double z1 = rng.uniform(-3.0, 3.0);
            const double z2 = rng.uniform(-3.0, 3.0);
            if (z1 == z2) continue;
            const double slope =
                std::abs(smooth_sign(z1, eps) - smooth_sign(z2, eps)) / std::abs(z1 - z2);
            const double normalized = slope * eps;
            if (normalized > worst) worst = normalized;
            s.require(slope <= (1.0 / eps) * (1.0 + 1e-9), "slope exceeds 1/eps");
        }
    }
    results.add("sign_lipschitz_max_normalized_slope", worst, "measured");
    return s.result;
}

SuiteResult suite_derivative_fd(const ExperimentConfig&, ResultsWriter& results) {
    SuiteCheck s("derivative_fd");
    auto central = [](const std::function<double(double)>& f, double z) {
        const double h = 1e-6 * std::max(1.0, std::abs(z));
        return (f(z + h) - f(z - h)) / (2.0 * h);
    };
    double worst = 0.0;
    for (double eps : {1.0, 0.5, 0.1}) {
        for (int k = -40; k <= 40; ++k) {
            const double z = eps * (6.0 * k / 40.0);
            struct Case {
                double analytic, fd;
            };
            const std::vector<Case> cases = {
                {smooth_sign_deriv(z, eps),
                 central([&](double t) { return smooth_sign(t, eps); }, z)},
                {smooth_abs_deriv(z, eps),
                 central([&](double t) { return smooth_abs(t, eps); }, z)},
                {smooth_clip_deriv(z, -1.5, 1.5, eps),
                 central([&](double t) { return smooth_clip(t, -1.5, 1.5, eps); }, z)},
                {smooth_clip_interior_deriv(z, -1.5, 1.5, eps),
                 central([&](double t) { return smooth_clip_interior(t, -1.5, 1.5, eps); }, z)},
            };
            for (const Case& c : cases) {
                const double scale = std::max(std::abs(c.analytic), 1e-12);
                const double rel = std::abs(c.analytic - c.fd) / scale;
                if (std::abs(c.analytic) > 1e-8 && rel > worst) worst = rel;
                if (std::abs(c.analytic) > 1e-8)
                    s.require(rel <= 1e-6, "derivative/FD mismatch at z=" + format_g17(z));
            }
        }
    }
    results.add("derivative_fd_max_rel_error", worst, "measured");
    return s.result;
}

SuiteResult suite_clip_lipschitz(const ExperimentConfig&, ResultsWriter& results) {
    SuiteCheck s("clip_lipschitz");
    // The logistic clip is NOT uniformly 1-Lipschitz in eps; its slope peaks
    // at (b-a)/(4 eps). Record the measured constant, assert the formula
    // envelope only.
    const double a = -1.5, b = 1.5;
    for (double eps : {1.0, 0.5, 0.1, 0.05}) {
        double measured = 0.0;
        for (int k = -400; k <= 400; ++k) {
            const double x = a + (b - a) * (k + 400) / 800.0;
            const double d = smooth_clip_deriv(x, a, b, eps);
            if (d > measured) measured = d;
        }
        const double envelope = (b - a) / (4.0 * eps);
        results.add("clip_lipschitz_measured", measured, "measured", std::nullopt,
                    std::nullopt, eps);
        results.add("clip_lipschitz_envelope", envelope, "bound", std::nullopt,
                    std::nullopt, eps);
        s.require(measured <= envelope * (1.0 + 1e-9), "clip slope exceeds envelope");
    }
    return s.result;
}

SuiteResult suite_constraint_algebra(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("constraint_algebra");
    Rng rng(cfg.seed ^ 0x5ca1ab1e0ddba11ULL);
    double worst_pythag = 0.0, worst_adjoint = 0.0, worst_idem = 0.0, worst_orth = 0.0;
    const int instances = 300;
    for (int k = 0; k < instances; ++k) {
        const int n = 1 + static_cast<int>(rng.raw() % 64);
        const int m = 1 + static_cast<int>(rng.raw() % 64);
        WeightMatrix w(n, m), a(n, m);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = rng.uniform(-1.0, 1.0);
            a.data()[i] = rng.uniform(-1.0, 1.0);
        }
        const double nm = static_cast<double>(n) * m;
        const double alpha = layer_mean(w);
        const WeightMatrix p = zero_mean_project(w);

        const double lhs = compensated_dot(w, w);
        const double rhs = nm * alpha * alpha + compensated_dot(p, p);
        const double pythag = std::abs(lhs - rhs) / std::max(1e-300, lhs);
        worst_pythag = std::max(worst_pythag, pythag);
        s.require(pythag <= 1e-12, "pythagorean identity");

        const double adjoint =
            std::abs(compensated_dot(a, p) - compensated_dot(zero_mean_project(a), w));
        worst_adjoint = std::max(worst_adjoint, adjoint);
        s.require(adjoint <= 1e-12, "self-adjointness");

        const double idem = (zero_mean_project(p) - p).cwiseAbs().maxCoeff();
        worst_idem = std::max(worst_idem, idem);
        s.require(idem <= 1e-14, "idempotence");

        const double orth = std::abs(pairwise_sum(p));
        worst_orth = std::max(worst_orth, orth);
        s.require(orth <= 1e-12 * nm, "orthogonality");
    }
    results.add("constraint_pythagorean_max_rel", worst_pythag, "measured");
    results.add("constraint_self_adjoint_max_abs", worst_adjoint, "measured");
    results.add("constraint_idempotence_max_abs", worst_idem, "measured");
    results.add("constraint_orthogonality_max_abs", worst_orth, "measured");
    return s.result;
}

SuiteResult suite_shift_invariance(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("shift_invariance");
    Rng rng(cfg.seed ^ 0xfeedface12345678ULL);
    const SmoothingParams p = cfg.smoothing();
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        // Entries on a coarse binary grid with power-of-two dims keep every
        // intermediate exactly representable, so the shift test is exact.
        WeightMatrix w(8, 16);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = std::floor(rng.uniform(-1.0, 1.0) * 1024.0) / 1024.0;
        const double c = 0.5;
        const WeightMatrix q0 = quantize_weights(w, p);
        const WeightMatrix q1 = quantize_weights((w.array() + c).matrix(), p);
        const double dq = (q1 - q0).cwiseAbs().maxCoeff();
        const double db = std::abs(beta_scale((w.array() + c).matrix(), p) -
                                   beta_scale(w, p));
        worst = std::max(worst, std::max(dq, db));
        s.require(dq == 0.0, "quantize_weights changed under constant shift");
        s.require(db == 0.0, "beta_scale changed under constant shift");
    }
    results.add("shift_invariance_max_abs", worst, "measured");
    return s.result;
}

SuiteResult suite_forward_invariants(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("forward_invariants");
    Rng rng(cfg.seed ^ 0xabcddcba98766789ULL);
    const Architecture arch = cfg.architecture();
    const SmoothingParams p = cfg.smoothing();
    double max_abs_output = 0.0;
    for (int k = 0; k < 20; ++k) {
        const NetworkState state = random_state(arch, p, cfg.clamp, rng);
        Eigen::VectorXd x(arch.input_dim());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x[i] = rng.uniform(-cfg.support, cfg.support);
        const auto [f, trace] = network_forward(x, state);
        s.require(f.allFinite(), "non-finite forward output");
        max_abs_output = std::max(max_abs_output, f.cwiseAbs().maxCoeff());
        for (const LayerTrace& t : trace.layers) {
            s.require(t.quant_weights.cwiseAbs().maxCoeff() < 1.0,
                      "quantized weight outside (-1,1)");
            s.require(t.beta >= p.epsilon, "beta below eps");
            if (p.clip == ClipVariant::Logistic) {
                s.require(t.quant_input.minCoeff() > p.clip_lo() &&
                              t.quant_input.maxCoeff() < p.clip_hi(),
                          "quantized activation outside clip range");
            }
        }
    }
    results.add("forward_max_abs_output", max_abs_output, "measured");
    return s.result;
}

SuiteResult suite_forward_lipschitz(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("forward_lipschitz");
    Rng rng(cfg.seed ^ 0x600dcafe600dcafeULL);
    const Architecture arch = cfg.architecture();
    const SmoothingParams p = cfg.smoothing();
    const Dataset data = synthesize_dataset(cfg);
    const NetworkState state = random_state(arch, p, cfg.init_scale, rng);
    const double estimate = estimate_forward_lipschitz(state, data, 50, cfg.seed + 7);
    const double bound = forward_lipschitz_bound(arch, p, cfg.clamp);
    results.add("forward_lipschitz_estimate", estimate, "measured");
    results.add("forward_lipschitz_bound", bound, "bound");
    s.require(estimate <= bound, "empirical constant exceeds recursive bound");
    return s.result;
}

SuiteResult suite_gradient_fd(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("gradient_fd");
    Rng rng(cfg.seed ^ 0x0123456789abcdefULL);
    const Architecture arch = Architecture::mlp(3, {3}, 1);
    for (double eps : {1.0, 0.3, 0.05}) {
        const SmoothingParams p =
            SmoothingParams::create(eps, cfg.bits, cfg.delta, cfg.clip_variant);
        const NetworkState state = random_state(arch, p, 0.8, rng);
        Dataset data;
        data.inputs.resize(6, 3);
        data.targets.resize(6, 1);
        for (Eigen::Index i = 0; i < data.inputs.size(); ++i)
            data.inputs.data()[i] = rng.uniform(-1.0, 1.0);
        for (Eigen::Index i = 0; i < data.targets.size(); ++i)
            data.targets.data()[i] = rng.uniform(-1.0, 1.0);
        const LossSpec loss = LossSpec::squared_error(1.0);
        const RiskGradient g = risk_gradient(state, data, loss);
        const auto fd = fd_risk_gradient(state, data, loss);
        const double err = max_gradient_disagreement(g.layers, fd);
        results.add("gradient_fd_max_rel_error", err, "measured", std::nullopt,
                    std::nullopt, eps);
        s.require(err <= 1e-5, "gradient mismatch at eps=" + format_g17(eps));
    }
    return s.result;
}

SuiteResult suite_mean_gradient_identity(const ExperimentConfig& cfg,
                                         ResultsWriter& results) {
    SuiteCheck s("mean_gradient_identity");
    Rng rng(cfg.seed ^ 0x31415926535897ULL);
    const Architecture arch = cfg.architecture();
    const SmoothingParams p = cfg.smoothing();
    const Dataset data = synthesize_dataset(cfg);
    const LossSpec loss = LossSpec::squared_error(cfg.support);
    const NetworkState state = random_state(arch, p, cfg.init_scale, rng);
    const RiskGradient g = risk_gradient(state, data, loss);
    double worst = 0.0;
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
        const double tree = layer_mean(g.layers[l]);
        double naive = 0.0;
        for (Eigen::Index k = 0; k < g.layers[l].size(); ++k)
            naive += g.layers[l].data()[k];
        naive /= static_cast<double>(g.layers[l].size());
        const double diff = std::abs(tree - naive);
        worst = std::max(worst, diff);
        s.require(diff <= 1e-14, "mean route disagreement at layer " + std::to_string(l));
    }
    results.add("mean_gradient_identity_max_abs", worst, "measured");
    return s.result;
}

SuiteResult suite_constraint_preservation(const ExperimentConfig& cfg,
                                          ResultsWriter& results) {
    SuiteCheck s("constraint_preservation");
    ExperimentConfig local = cfg;
    local.clamp = 16.0;  // generous box: no clipping on this horizon
    local.init_scale = std::min(cfg.init_scale, 1.0);
    local.eta = 0.02;
    local.horizon = 0.5;
    const Dataset data = synthesize_dataset(local);
    const LossSpec loss = LossSpec::squared_error(local.support);
    const ParticleTrajectory traj = run_trajectory(
        local.architecture(), local.smoothing(), data, loss, local.run_config());
    double worst = 0.0;
    int no_clip_steps = 0;
    for (const StepReport& step : traj.steps) {
        if (step.any_clipped) continue;
        ++no_clip_steps;
        for (std::size_t l = 0; l < step.mean_after.size(); ++l) {
            const double predicted = step.mean_before[l] - local.eta * step.grad_mean[l];
            const double diff = std::abs(step.mean_after[l] - predicted);
            worst = std::max(worst, diff);
            s.require(diff <= 1e-13, "mean identity violated at layer " + std::to_string(l));
        }
    }
    s.require(no_clip_steps > 0, "no clip-free steps recorded");
    results.add("constraint_preservation_max_abs", worst, "measured");
    results.add("constraint_preservation_steps", no_clip_steps, "diagnostic");
    return s.result;
}

SuiteResult suite_clamp_invariant(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("clamp_invariant");
    ExperimentConfig local = cfg;
    local.clamp = 0.3;
    local.init_scale = 0.3;
    local.eta = 0.5;  // oversized steps force clipping
    local.horizon = 0.5 * 10;
    const Dataset data = synthesize_dataset(local);
    const LossSpec loss = LossSpec::squared_error(local.support);
    const ParticleTrajectory traj = run_trajectory(
        local.architecture(), local.smoothing(), data, loss, local.run_config());
    int clip_events = 0;
    for (const StepReport& step : traj.steps)
        if (step.any_clipped) ++clip_events;
    double worst = 0.0;
    for (const auto& snap : traj.snapshots)
        for (const WeightMatrix& w : snap) {
            worst = std::max(worst, w.cwiseAbs().maxCoeff());
            s.require(w.cwiseAbs().maxCoeff() <= local.clamp, "snapshot exceeds clamp");
        }
    results.add("clamp_invariant_max_abs", worst, "measured");
    results.add("clamp_invariant_clip_events", clip_events, "diagnostic");
    return s.result;
}

SuiteResult suite_equicontinuity(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("equicontinuity");
    ExperimentConfig local = cfg;
    local.dims = {{4, 8}, {8, 1}};
    local.activations = {ActivationKind::Tanh, ActivationKind::Identity};
    local.eta = 0.02;
    local.horizon = 0.4;
    local.stride = 2;
    local.samples = std::min(cfg.samples, 32);
    const Dataset data = synthesize_dataset(local);
    const LossSpec loss = LossSpec::squared_error(local.support);
    const ParticleTrajectory traj = run_trajectory(
        local.architecture(), local.smoothing(), data, loss, local.run_config());
    const double vsup = traj.velocity_sup();
    double worst_ratio = 0.0;
    for (int a = 0; a < traj.snapshot_count(); ++a) {
        for (int b = a + 1; b < traj.snapshot_count(); ++b) {
            const double dt = traj.times[b] - traj.times[a];
            for (int l = 0; l < traj.layer_count(); ++l) {
                const EmpiricalMeasure mu{traj.snapshots[a][l]};
                const EmpiricalMeasure nu{traj.snapshots[b][l]};
                const double w2 = wasserstein2(mu, nu);
                const double w1 = wasserstein1(mu, nu);
                s.require(w1 <= w2 * (1.0 + 1e-12) + 1e-15, "W1 > W2");
                if (vsup > 0.0) {
                    const double ratio = w2 / (vsup * dt);
                    worst_ratio = std::max(worst_ratio, ratio);
                    s.require(w2 <= vsup * dt * (1.0 + 1e-6),
                              "W2 exceeds velocity-sup bound");
                }
            }
        }
    }
    results.add("equicontinuity_max_ratio", worst_ratio, "measured");
    results.add("equicontinuity_velocity_sup", vsup, "measured");
    return s.result;
}

SuiteResult suite_wasserstein_metric(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("wasserstein_metric");
    Rng rng(cfg.seed ^ 0x0f0e0d0c0b0a0908ULL);
    double worst_sym = 0.0, worst_tri = 0.0;
    for (int k = 0; k < 60; ++k) {
        const int dim = 1 + static_cast<int>(rng.raw() % 3);
        auto make = [&](int n) {
            Eigen::MatrixXd atoms(n, dim);
            for (Eigen::Index i = 0; i < atoms.size(); ++i)
                atoms.data()[i] = rng.uniform(-1.0, 1.0);
            return EmpiricalMeasure{atoms};
        };
        const EmpiricalMeasure mu = make(2 + static_cast<int>(rng.raw() % 6));
        const EmpiricalMeasure nu = make(2 + static_cast<int>(rng.raw() % 6));
        const EmpiricalMeasure kappa = make(2 + static_cast<int>(rng.raw() % 6));
        for (auto dist : {wasserstein1, wasserstein2}) {
            const double d_mn = dist(mu, nu);
            const double d_nm = dist(nu, mu);
            const double d_mk = dist(mu, kappa);
            const double d_nk = dist(nu, kappa);
            worst_sym = std::max(worst_sym, std::abs(d_mn - d_nm));
            worst_tri = std::max(worst_tri, d_mk - (d_mn + d_nk));
            s.require(std::abs(d_mn - d_nm) <= 1e-12, "symmetry");
            s.require(d_mk <= d_mn + d_nk + 1e-10, "triangle inequality");
            s.require(dist(mu, mu) <= 1e-14, "identity of indiscernibles");
        }
        s.require(wasserstein1(mu, nu) <= wasserstein2(mu, nu) * (1.0 + 1e-12) + 1e-15,
                  "W1 > W2");
    }
    results.add("wasserstein_symmetry_max_abs", worst_sym, "measured");
    results.add("wasserstein_triangle_max_violation", std::max(worst_tri, 0.0),
                "measured");
    return s.result;
}

SuiteResult suite_singular_integral(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("singular_integral");
    Rng rng(cfg.seed ^ 0xdeadbeefcafef00dULL);
    const std::vector<double> eps_grid = {1.0, 0.1, 0.01};
    const Eigen::VectorXd center = Eigen::VectorXd::Zero(4);
    const TestFunction phi = TestFunction::spline_bump(center, 3.0, 0.7);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int n = 4 + static_cast<int>(rng.raw() % 32);
        Eigen::MatrixXd atoms(n, 4);
        // Resample until the probed pushforward stays off the hyperplane.
        for (int attempt = 0; attempt < 200; ++attempt) {
            for (Eigen::Index i = 0; i < atoms.size(); ++i)
                atoms.data()[i] = rng.uniform(-1.0, 1.0);
            const double mean = atoms.mean();
            bool ok = true;
            for (int i = 0; i < n; ++i)
                if (std::abs(atoms(i, 0) - mean) < 1e-6) ok = false;
            if (ok) break;
        }
        const EmpiricalMeasure mu{atoms};
        const auto report = singular_integral_check(
            mu, [&](const Eigen::VectorXd& w) { return phi.value(w); }, 0.7, 0, 0,
            eps_grid);
        for (const auto& row : report.rows) {
            worst = std::max(worst, std::abs(row.smoothed_value) / row.bound);
            s.require(row.within_bound, "smoothed integral exceeds 2|phi| bound");
        }
    }
    results.add("singular_integral_max_normalized", worst, "measured");
    return s.result;
}

SuiteResult suite_continuity_residual(const ExperimentConfig& cfg,
                                      ResultsWriter& results) {
    SuiteCheck s("continuity_residual");
    ExperimentConfig local = cfg;
    local.dims = {{3, 8}, {8, 1}};
    local.activations = {ActivationKind::Tanh, ActivationKind::Identity};
    local.clamp = 16.0;
    local.init_scale = 0.4;
    local.horizon = 0.2;
    local.stride = 1;
    local.samples = std::min(cfg.samples, 32);
    const Dataset data = synthesize_dataset(local);
    const LossSpec loss = LossSpec::squared_error(local.support);
    const TestFunction phi = TestFunction::quadratic(
        0.3, Eigen::VectorXd::Constant(3, 0.5), Eigen::VectorXd::Constant(3, 0.25),
        Eigen::VectorXd::Zero(3));
    double prev = -1.0;
    for (double eta : {0.01, 0.005}) {
        local.eta = eta;
        const ParticleTrajectory traj = run_trajectory(
            local.architecture(), local.smoothing(), data, loss, local.run_config());
        const auto report = continuity_residual(traj, 0, phi, 0.1, data, loss);
        results.add("continuity_residual_eta_" + format_g17(eta), report.residual,
                    "measured", 0, 0.1);
        s.require(report.interior, "probe time not interior");
        if (prev >= 0.0) s.require(report.residual < prev, "residual did not shrink");
        prev = report.residual;
    }
    return s.result;
}

SuiteResult suite_gradient_bound(const ExperimentConfig& cfg, ResultsWriter& results) {
    SuiteCheck s("gradient_bound");
    ExperimentConfig local = cfg;
    local.samples = std::min(cfg.samples, 32);
    const Dataset data = synthesize_dataset(local);
    const LossSpec loss = LossSpec::squared_error(local.support);
    const Architecture arch = local.architecture();
    const auto fitted = fit_gradient_bound_constant(arch, local.smoothing(), data,
                                                    loss, 20, local.clamp,
                                                    local.seed ^ 0x77);
    for (std::size_t l = 0; l < fitted.size(); ++l) {
        s.require(std::isfinite(fitted[l]), "non-finite fitted constant");
        results.add("gradient_bound_fitted", fitted[l], "measured",
                    static_cast<int>(l));
    }
    // Ratio trend over the eps grid on one fixed state: diagnostic only.
    for (double eps : {1.0, 0.5, 0.25}) {
        const SmoothingParams p =
            SmoothingParams::create(eps, local.bits, local.delta, local.clip_variant);
        Rng state_rng(12345);
        const NetworkState state = random_state(arch, p, local.clamp, state_rng);
        const RiskGradient g = risk_gradient(state, data, loss);
        const auto report = gradient_bound_check(g, state, data, loss);
        for (std::size_t l = 0; l < report.ratio.size(); ++l)
            results.add("gradient_bound_ratio", report.ratio[l], "diagnostic",
                        static_cast<int>(l), std::nullopt, eps);
    }
    return s.result;
}

// ---------------------------------------------------------------------------
// Experiment kinds
// ---------------------------------------------------------------------------

void write_snapshot_csv(const std::string& path, const WeightMatrix& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("cannot open snapshot file " + path);
    out << "i,j,value\n";
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            out << i << ',' << j << ',' << format_g17(w(i, j)) << '\n';
}

int run_train(const ExperimentConfig& cfg, const std::string& out_dir,
              const std::string& run_id, ResultsWriter& results, JsonlLogger& log) {
    const Dataset data = synthesize_dataset(cfg);
    const LossSpec loss = LossSpec::squared_error(cfg.support);
    const ParticleTrajectory traj = run_trajectory(cfg.architecture(), cfg.smoothing(),
                                                   data, loss, cfg.run_config());
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const StepReport& step = traj.steps[k];
        const double t = static_cast<double>(k) * cfg.eta;
        results.add("risk", step.risk, "measured", std::nullopt, t);
        for (std::size_t l = 0; l < step.mean_after.size(); ++l) {
            results.add("layer_mean", step.mean_after[l], "measured",
                        static_cast<int>(l), t + cfg.eta);
            results.add("max_row_speed", step.max_row_speed[l], "measured",
                        static_cast<int>(l), t);
        }
        results.add("clip_event", step.any_clipped ? 1.0 : 0.0, "measured",
                    std::nullopt, t);
    }
    for (int l = 0; l < traj.layer_count(); ++l)
        results.add("velocity_sup", traj.velocity_sup(l), "measured", l);

    for (int snap = 0; snap < traj.snapshot_count(); ++snap) {
        for (int l = 0; l < traj.layer_count(); ++l) {
            std::ostringstream name;
            name << "traj_" << run_id << "_" << l << "_" << traj.snapshot_steps[snap]
                 << ".csv";
            write_snapshot_csv(out_dir + "/" + name.str(),
                               traj.snapshots[snap][l]);
        }
        for (int l = 0; l < traj.layer_count(); ++l)
            results.add("alpha", traj.alphas[snap][l], "measured", l,
                        traj.times[snap]);
    }
    log.event("train_done", json{{"steps", traj.steps.size()},
                                 {"snapshots", traj.snapshot_count()}}
                                .dump());
    return 0;
}

int run_sweep_eps(const ExperimentConfig& cfg, ResultsWriter& results,
                  JsonlLogger& log, int workers) {
    const Dataset data = synthesize_dataset(cfg);
    const LossSpec loss = LossSpec::squared_error(cfg.support);
    const auto times = cfg.comparison_times();
    const EpsSweepResult sweep =
        eps_sweep(cfg.architecture(), cfg.smoothing(), data, loss, cfg.run_config(),
                  cfg.epsilon_list, times, workers);
    for (std::size_t i = 0; i < sweep.eps_values.size(); ++i)
        results.add("velocity_sup", sweep.velocity_sup[i], "measured", std::nullopt,
                    std::nullopt, sweep.eps_values[i]);
    for (const SweepDistanceRow& row : sweep.distances) {
        results.add("w1_consecutive", row.w1, "measured", row.layer, row.time,
                    row.key_lo);
        results.add("w2_consecutive", row.w2, "measured", row.layer, row.time,
                    row.key_lo);
    }
    log.event("sweep_eps_done", json{{"cells", sweep.eps_values.size()}}.dump());
    return 0;
}

int run_sweep_width(const ExperimentConfig& cfg, ResultsWriter& results,
                    JsonlLogger& log, int workers) {
    const Dataset data = synthesize_dataset(cfg);
    const LossSpec loss = LossSpec::squared_error(cfg.support);
    const auto times = cfg.comparison_times();
    const WidthSweepResult sweep =
        width_sweep(cfg.architecture(), cfg.smoothing(), data, loss,
                    cfg.run_config(), cfg.widths, times, workers);
    for (const SweepDistanceRow& row : sweep.distances) {
        results.add("w1_consecutive", row.w1, "measured", row.layer, row.time,
                    std::nullopt, row.key_lo);
        results.add("w2_consecutive", row.w2, "measured", row.layer, row.time,
                    std::nullopt, row.key_lo);
    }
    log.event("sweep_width_done", json{{"cells", sweep.widths.size()}}.dump());
    return 0;
}

int run_gradcheck(const ExperimentConfig& cfg, ResultsWriter& results,
                  JsonlLogger& log) {
    Rng rng(cfg.seed ^ 0x6c6f747573666c6fULL);
    const Architecture arch = cfg.architecture();
    Dataset data = synthesize_dataset(cfg);
    if (data.size() > 16) {
        data.inputs.conservativeResize(16, Eigen::NoChange);
        data.targets.conservativeResize(16, Eigen::NoChange);
    }
    const LossSpec loss = LossSpec::squared_error(cfg.support);
    std::vector<double> eps_grid = cfg.epsilon_list;
    if (eps_grid.empty()) eps_grid = {cfg.epsilon};
    bool all_ok = true;
    for (double eps : eps_grid) {
        const SmoothingParams p =
            SmoothingParams::create(eps, cfg.bits, cfg.delta, cfg.clip_variant);
        const NetworkState state = random_state(arch, p, cfg.init_scale, rng);
        const RiskGradient g = risk_gradient(state, data, loss);
        const auto fd = fd_risk_gradient(state, data, loss);
        const double err = max_gradient_disagreement(g.layers, fd);
        // Below the documented eps threshold FD agreement degrades by
        // design; those rows are recorded as diagnostics, not failures.
        const bool asserted = eps >= 0.05;
        results.add("gradcheck_max_rel_error", err, asserted ? "measured" : "diagnostic",
                    std::nullopt, std::nullopt, eps);
        if (asserted && err > 1e-5) all_ok = false;
    }
    log.event("gradcheck_done", json{{"eps_count", eps_grid.size()}}.dump());
    return all_ok ? 0 : 1;
}

} // namespace

std::vector<SuiteResult> run_verify_suites(const ExperimentConfig& cfg,
                                           ResultsWriter& results) {
    using SuiteFn = SuiteResult (*)(const ExperimentConfig&, ResultsWriter&);
    const std::vector<SuiteFn> suites = {
        suite_quadrature_identity, suite_sign_deriv_envelope, suite_bounded_integral,
        suite_dirac_limit,         suite_sign_lipschitz,      suite_derivative_fd,
        suite_clip_lipschitz,      suite_constraint_algebra,  suite_shift_invariance,
        suite_forward_invariants,  suite_forward_lipschitz,   suite_gradient_fd,
        suite_mean_gradient_identity, suite_constraint_preservation,
        suite_clamp_invariant,     suite_equicontinuity,      suite_wasserstein_metric,
        suite_singular_integral,   suite_continuity_residual, suite_gradient_bound,
    };
    std::vector<SuiteResult> out;
    out.reserve(suites.size());
    for (SuiteFn fn : suites) out.push_back(fn(cfg, results));
    return out;
}

int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                   int workers) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const std::string run_id = config_hash(cfg);
    ResultsWriter results(run_id);
    JsonlLogger log(out_dir + "/run.jsonl");
    const auto start = std::chrono::steady_clock::now();
    log.event("run_start", json{{"run_id", run_id},
                                {"kind", to_string(cfg.kind)},
                                {"seed", cfg.seed},
                                {"workers", workers}}
                               .dump());

    int exit_code = 0;
    try {
        switch (cfg.kind) {
            case ExperimentKind::Verify: {
                const auto suites = run_verify_suites(cfg, results);
                int failed = 0;
                for (const SuiteResult& suite : suites) {
                    results.add("suite_pass/" + suite.name, suite.pass ? 1.0 : 0.0,
                                "measured");
                    std::cout << (suite.pass ? "PASS  " : "FAIL  ") << suite.name;
                    if (!suite.pass) std::cout << "  [" << suite.detail << "]";
                    std::cout << "\n";
                    log.event("suite", json{{"name", suite.name},
                                            {"pass", suite.pass},
                                            {"detail", suite.detail}}
                                           .dump());
                    if (!suite.pass) ++failed;
                }
                std::cout << (failed == 0 ? "VERIFY OK" : "VERIFY FAILED") << " ("
                          << (suites.size() - failed) << "/" << suites.size()
                          << " suites)\n";
                exit_code = failed == 0 ? 0 : 1;
                break;
            }
            case ExperimentKind::Train:
                exit_code = run_train(cfg, out_dir, run_id, results, log);
                break;
            case ExperimentKind::SweepEps:
                exit_code = run_sweep_eps(cfg, results, log, workers);
                break;
            case ExperimentKind::SweepWidth:
                exit_code = run_sweep_width(cfg, results, log, workers);
                break;
            case ExperimentKind::GradCheck:
                exit_code = run_gradcheck(cfg, results, log);
                break;
        }
    } catch (const NumericalError& e) {
        log.event("numerical_fatality", json{{"error", e.what()}}.dump());
        results.write_csv(out_dir + "/results.csv");
        const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        log.event("run_end", json{{"exit_code", 3}, {"wall_ms", wall}}.dump());
        return 3;
    }

    results.write_csv(out_dir + "/results.csv");
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    log.event("run_end", json{{"exit_code", exit_code}, {"wall_ms", wall}}.dump());
    return exit_code;
}

} // namespace bitflow
