#include "bitflow/meanfield_analysis.hpp"

#include "bitflow/errors.hpp"
#include "bitflow/parallel.hpp"
#include "bitflow/reduction.hpp"
#include "bitflow/transport.hpp"

#include <cmath>
#include <vector>

namespace bitflow {

EmpiricalMeasure empirical_measure(const NetworkState& s, int layer) {
    if (layer < 0 || layer >= static_cast<int>(s.weights.size()))
        throw ShapeError("empirical_measure: layer index out of range");
    return {s.weights[static_cast<std::size_t>(layer)]};
}

EmpiricalMeasure measure_from_matrix(const WeightMatrix& w) { return {w}; }

namespace {

double wasserstein_impl(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        int power) {
    if (mu.dimension() != nu.dimension())
        throw ShapeError("wasserstein: dimension mismatch");
    if (mu.size() == 0 || nu.size() == 0)
        throw ShapeError("wasserstein: empty measure");

    const int n = mu.size();
    const int m = nu.size();

    if (mu.dimension() == 1) {
        std::vector<double> xs(mu.atoms.data(), mu.atoms.data() + n);
        std::vector<double> ys(nu.atoms.data(), nu.atoms.data() + m);
        const double c = quantile_coupling_cost(std::move(xs), std::move(ys), power);
        return power == 1 ? c : std::sqrt(c);
    }

    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double d = (mu.atoms.row(i) - nu.atoms.row(j)).norm();
            cost(i, j) = power == 1 ? d : d * d;
        }
    }
    double mean_cost;
    if (n == m) {
        mean_cost = assignment_min_cost(cost) / static_cast<double>(n);
    } else {
        mean_cost = transport_min_cost(cost);
    }
    return power == 1 ? mean_cost : std::sqrt(mean_cost);
}

} // namespace

double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    return wasserstein_impl(mu, nu, 1);
}

double wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    return wasserstein_impl(mu, nu, 2);
}

TestFunction TestFunction::gaussian_bump(Eigen::VectorXd center, double width,
                                         double amplitude) {
    if (!(width > 0)) throw DomainError("gaussian_bump: width must be positive");
    TestFunction f;
    f.kind = Kind::GaussianBump;
    f.center = std::move(center);
    f.width = width;
    f.amplitude = amplitude;
    return f;
}

TestFunction TestFunction::spline_bump(Eigen::VectorXd center, double width,
                                       double amplitude) {
    if (!(width > 0)) throw DomainError("spline_bump: width must be positive");
    TestFunction f;
    f.kind = Kind::SplineBump;
    f.center = std::move(center);
    f.width = width;
    f.amplitude = amplitude;
    return f;
}

TestFunction TestFunction::quadratic(double constant, Eigen::VectorXd linear,
                                     Eigen::VectorXd quad,
                                     Eigen::VectorXd center) {
    TestFunction f;
    f.kind = Kind::Quadratic;
    f.constant = constant;
    f.linear = std::move(linear);
    f.quad = std::move(quad);
    f.center = std::move(center);
    return f;
}

double TestFunction::value(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd d = w - center;
    switch (kind) {
        case Kind::GaussianBump:
            return amplitude * std::exp(-0.5 * d.squaredNorm() / (width * width));
        case Kind::SplineBump: {
            const double rho = d.squaredNorm() / (width * width);
            if (rho >= 1.0) return 0.0;
            const double t = 1.0 - rho;
            return amplitude * t * t * t;
        }
        case Kind::Quadratic:
            return constant + linear.dot(d) + quad.dot(d.cwiseProduct(d));
    }
    return 0.0;
}

Eigen::VectorXd TestFunction::gradient(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd d = w - center;
    switch (kind) {
        case Kind::GaussianBump:
            return value(w) * (-d / (width * width));
        case Kind::SplineBump: {
            const double rho = d.squaredNorm() / (width * width);
            if (rho >= 1.0) return Eigen::VectorXd::Zero(w.size());
            const double t = 1.0 - rho;
            return (-6.0 * amplitude * t * t / (width * width)) * d;
        }
        case Kind::Quadratic:
            return linear + 2.0 * quad.cwiseProduct(d);
    }
    return Eigen::VectorXd::Zero(w.size());
}

namespace {

int nearest_snapshot(const ParticleTrajectory& traj, double time) {
    if (traj.times.empty()) throw DomainError("trajectory has no snapshots");
    int best = 0;
    double best_d = std::abs(traj.times[0] - time);
    for (int k = 1; k < traj.snapshot_count(); ++k) {
        const double d = std::abs(traj.times[static_cast<std::size_t>(k)] - time);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

double mean_phi(const TestFunction& phi, const WeightMatrix& w) {
    std::vector<double> values(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        values[static_cast<std::size_t>(i)] = phi.value(w.row(i).transpose());
    return pairwise_mean(values);
}

NetworkState state_at_snapshot(const ParticleTrajectory& traj, int snap) {
    NetworkState s;
    s.arch = traj.arch;
    s.smoothing = traj.smoothing;
    s.weights = traj.snapshots[static_cast<std::size_t>(snap)];
    return s;
}

} // namespace

ContinuityResidualReport continuity_residual(const ParticleTrajectory& traj,
                                             int layer, const TestFunction& phi,
                                             double time, const Dataset& data,
                                             const LossSpec& loss) {
    if (layer < 0 || layer >= traj.layer_count())
        throw ShapeError("continuity_residual: layer index out of range");
    if (traj.snapshot_count() < 2)
        throw DomainError("continuity_residual: need at least two snapshots");

    const int k = nearest_snapshot(traj, time);
    const int last = traj.snapshot_count() - 1;
    const std::size_t lu = static_cast<std::size_t>(layer);

    ContinuityResidualReport report;
    report.time = traj.times[static_cast<std::size_t>(k)];
    report.interior = (k > 0 && k < last);

    const int lo = k > 0 ? k - 1 : k;
    const int hi = k < last ? k + 1 : k;
    const double phi_hi = mean_phi(phi, traj.snapshots[static_cast<std::size_t>(hi)][lu]);
    const double phi_lo = mean_phi(phi, traj.snapshots[static_cast<std::size_t>(lo)][lu]);
    report.time_derivative =
        (phi_hi - phi_lo) /
        (traj.times[static_cast<std::size_t>(hi)] - traj.times[static_cast<std::size_t>(lo)]);

    const NetworkState s = state_at_snapshot(traj, k);
    const RiskGradient grad = risk_gradient(s, data, loss);
    const WeightMatrix& w = s.weights[lu];
    const WeightMatrix& g = grad.layers[lu];
    std::vector<double> terms(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const Eigen::VectorXd velocity = -g.row(i).transpose();
        terms[static_cast<std::size_t>(i)] =
            phi.gradient(w.row(i).transpose()).dot(velocity);
    }
    report.transport_term = pairwise_mean(terms);
    report.residual = std::abs(report.time_derivative - report.transport_term);
    return report;
}

SingularIntegralReport singular_integral_check(
    const EmpiricalMeasure& mu,
    const std::function<double(const Eigen::VectorXd&)>& phi, double phi_sup,
    int probe_row, int probe_col, std::span<const double> eps_grid) {
    if (probe_col < 0 || probe_col >= mu.dimension())
        throw ShapeError("singular_integral_check: probe column out of range");

    const int n = mu.size();
    const double grand_mean = pairwise_sum(mu.atoms) / static_cast<double>(mu.atoms.size());

    // Pushforward coordinates and phi values per atom.
    std::vector<double> z(static_cast<std::size_t>(n)), pv(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        z[static_cast<std::size_t>(k)] = mu.atoms(k, probe_col) - grand_mean;
        pv[static_cast<std::size_t>(k)] = phi(mu.atoms.row(k).transpose());
    }

    SingularIntegralReport report;
    report.phi_sup = phi_sup;
    report.probe_row = probe_row;
    report.probe_col = probe_col;

    constexpr double kHalfWidth = 0.5;  // box kernel; smoothed density <= 1
    for (double eps : eps_grid) {
        SingularIntegralRow row;
        row.epsilon = eps;
        row.bound = 2.0 * phi_sup;
        std::vector<double> smoothed(static_cast<std::size_t>(n)),
            atomic(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const double zk = z[static_cast<std::size_t>(k)];
            if (std::abs(zk) <= 1e-12) ++row.atoms_near_zero;
            // Integral of sgn_eps' against the box kernel, in closed form.
            const double mass = (std::tanh((zk + kHalfWidth) / eps) -
                                 std::tanh((zk - kHalfWidth) / eps)) /
                                (2.0 * kHalfWidth);
            smoothed[static_cast<std::size_t>(k)] = pv[static_cast<std::size_t>(k)] * mass;
            atomic[static_cast<std::size_t>(k)] =
                pv[static_cast<std::size_t>(k)] * smooth_sign_deriv(zk, eps);
        }
        row.smoothed_value = pairwise_mean(smoothed);
        row.atomic_value = pairwise_mean(atomic);
        row.within_bound = std::abs(row.smoothed_value) <= row.bound * (1.0 + 1e-9);
        report.rows.push_back(row);
    }
    return report;
}

std::vector<double> default_comparison_times(double horizon) {
    return {0.0, horizon / 4.0, horizon / 2.0, 3.0 * horizon / 4.0, horizon};
}

EpsSweepResult eps_sweep(const Architecture& arch, const SmoothingParams& base,
                         const Dataset& data, const LossSpec& loss,
                         const RunConfig& cfg, std::span<const double> eps_list,
                         std::span<const double> comparison_times, int workers) {
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (eps_list[i] > eps_list[i - 1])
            throw DomainError("eps_sweep: eps list must be non-increasing");
    for (double eps : eps_list) {
        SmoothingParams p = base;
        p.epsilon = eps;
        p.validate();
    }

    EpsSweepResult result;
    result.comparison_times.assign(comparison_times.begin(), comparison_times.end());

    std::vector<ParticleTrajectory> runs(eps_list.size());
    parallel_for(eps_list.size(), workers, [&](std::size_t i) {
        SmoothingParams p = base;
        p.epsilon = eps_list[i];
        runs[i] = run_trajectory(arch, p, data, loss, cfg);
    });
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        result.eps_values.push_back(eps_list[i]);
        result.velocity_sup.push_back(runs[i].velocity_sup());
    }

    for (std::size_t r = 1; r < runs.size(); ++r) {
        const ParticleTrajectory& a = runs[r - 1];
        const ParticleTrajectory& b = runs[r];
        for (double t : comparison_times) {
            const int ka = nearest_snapshot(a, t);
            const int kb = nearest_snapshot(b, t);
            for (int l = 0; l < a.layer_count(); ++l) {
                const EmpiricalMeasure mu{a.snapshots[static_cast<std::size_t>(ka)]
                                              [static_cast<std::size_t>(l)]};
                const EmpiricalMeasure nu{b.snapshots[static_cast<std::size_t>(kb)]
                                              [static_cast<std::size_t>(l)]};
                SweepDistanceRow row;
                row.key_hi = result.eps_values[r - 1];
                row.key_lo = result.eps_values[r];
                row.layer = l;
                row.time = a.times[static_cast<std::size_t>(ka)];
                row.w1 = wasserstein1(mu, nu);
                row.w2 = wasserstein2(mu, nu);
                result.distances.push_back(row);
            }
        }
    }
    return result;
}

WidthSweepResult width_sweep(const Architecture& base, const SmoothingParams& p,
                             const Dataset& data, const LossSpec& loss,
                             const RunConfig& cfg, std::span<const int> widths,
                             std::span<const double> comparison_times,
                             int workers) {
    for (std::size_t i = 1; i < widths.size(); ++i)
        if (widths[i] < widths[i - 1])
            throw DomainError("width_sweep: widths must be non-decreasing");

    WidthSweepResult result;
    result.comparison_times.assign(comparison_times.begin(), comparison_times.end());

    std::vector<ParticleTrajectory> runs(widths.size());
    parallel_for(widths.size(), workers, [&](std::size_t i) {
        runs[i] = run_trajectory(base.with_hidden_width(widths[i]), p, data, loss, cfg);
    });
    result.widths.assign(widths.begin(), widths.end());

    for (std::size_t r = 1; r < runs.size(); ++r) {
        const ParticleTrajectory& a = runs[r - 1];
        const ParticleTrajectory& b = runs[r];
        for (double t : comparison_times) {
            const int ka = nearest_snapshot(a, t);
            const int kb = nearest_snapshot(b, t);
            for (int l = 0; l < a.layer_count(); ++l) {
                const WeightMatrix& wa = a.snapshots[static_cast<std::size_t>(ka)]
                                             [static_cast<std::size_t>(l)];
                const WeightMatrix& wb = b.snapshots[static_cast<std::size_t>(kb)]
                                             [static_cast<std::size_t>(l)];
                // Layers whose fan-in tracks the hidden width live in
                // different spaces across the sweep; only matching-dimension
                // layer measures are comparable.
                if (wa.cols() != wb.cols()) continue;
                SweepDistanceRow row;
                row.key_hi = static_cast<double>(result.widths[r - 1]);
                row.key_lo = static_cast<double>(result.widths[r]);
                row.layer = l;
                row.time = a.times[static_cast<std::size_t>(ka)];
                row.w1 = wasserstein1({wa}, {wb});
                row.w2 = wasserstein2({wa}, {wb});
                result.distances.push_back(row);
            }
        }
    }
    return result;
}

} // namespace bitflow
