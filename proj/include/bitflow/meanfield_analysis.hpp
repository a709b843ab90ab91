#pragma once

#include "bitflow/particle_dynamics.hpp"

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

namespace bitflow {

/// Uniform atomic measure: one atom of mass 1/n per row.
struct EmpiricalMeasure {
    Eigen::MatrixXd atoms;  // n x m

    int size() const { return static_cast<int>(atoms.rows()); }
    int dimension() const { return static_cast<int>(atoms.cols()); }
};

/// Row measure of one layer: atoms are the rows of W^(l).
EmpiricalMeasure empirical_measure(const NetworkState& s, int layer);

EmpiricalMeasure measure_from_matrix(const WeightMatrix& w);

/// Exact W1. 1-d measures use the monotone quantile coupling; equal-size
/// multi-d measures use the assignment solver; unequal sizes fall back to
/// the transportation LP (capacity n*m <= 10^6).
double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Exact W2 (square root of the optimal squared-distance cost).
double wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// C^1 test functions with closed-form gradients.
struct TestFunction {
    enum class Kind { GaussianBump, SplineBump, Quadratic };

    Kind kind = Kind::GaussianBump;
    Eigen::VectorXd center;
    double width = 1.0;
    double amplitude = 1.0;
    // Quadratic: constant + linear.(w-center) + sum_i quad_i (w-center)_i^2.
    double constant = 0.0;
    Eigen::VectorXd linear;
    Eigen::VectorXd quad;

    static TestFunction gaussian_bump(Eigen::VectorXd center, double width,
                                      double amplitude = 1.0);
    /// amplitude * (1 - r^2)^3 for r = |w-center|/width inside the ball,
    /// zero outside; C^2 with compact support.
    static TestFunction spline_bump(Eigen::VectorXd center, double width,
                                    double amplitude = 1.0);
    static TestFunction quadratic(double constant, Eigen::VectorXd linear,
                                  Eigen::VectorXd quad, Eigen::VectorXd center);

    double value(const Eigen::VectorXd& w) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
};

struct ContinuityResidualReport {
    double residual = 0.0;
    double time = 0.0;
    double time_derivative = 0.0;   // central difference of t -> mean phi
    double transport_term = 0.0;    // mean grad phi . v
    bool interior = true;           // false when a one-sided stencil was used
};

/// Weak-form continuity-equation residual at a snapshot time: the central
/// finite difference of t -> (1/n) sum phi(w_i(t)) minus the transport term
/// (1/n) sum grad phi(w_i(t)) . v(w_i(t)). Velocities are recomputed from
/// the snapshot state. Boundary snapshots use a one-sided stencil and are
/// flagged.
ContinuityResidualReport continuity_residual(const ParticleTrajectory& traj,
                                             int layer, const TestFunction& phi,
                                             double time, const Dataset& data,
                                             const LossSpec& loss);

struct SingularIntegralRow {
    double epsilon = 0.0;
    double smoothed_value = 0.0;  // kernel-smoothed pushforward integral
    double atomic_value = 0.0;    // raw pointwise kernel sum
    double bound = 0.0;           // 2 * phi_sup
    bool within_bound = false;
    int atoms_near_zero = 0;      // pushforward atoms within 1e-12 of zero
};

struct SingularIntegralReport {
    std::vector<SingularIntegralRow> rows;
    double phi_sup = 0.0;
    int probe_row = 0;
    int probe_col = 0;
};

/// Uniform-bound check for integrals of phi against sgn_eps' composed with
/// the projected coordinate. The assertable statement integrates against a
/// box-kernel-smoothed pushforward (half-width 1/2, density bounded by 1),
/// for which |value| <= 2 |phi|_inf holds uniformly in eps; the raw atomic
/// sum is reported alongside for diagnostics.
SingularIntegralReport singular_integral_check(
    const EmpiricalMeasure& mu,
    const std::function<double(const Eigen::VectorXd&)>& phi, double phi_sup,
    int probe_row, int probe_col, std::span<const double> eps_grid);

struct SweepDistanceRow {
    double key_hi = 0.0;  // coarser eps / smaller width of the pair
    double key_lo = 0.0;  // finer eps / larger width of the pair
    int layer = 0;
    double time = 0.0;
    double w1 = 0.0;
    double w2 = 0.0;
};

struct EpsSweepResult {
    std::vector<double> eps_values;
    std::vector<double> velocity_sup;       // per eps
    std::vector<SweepDistanceRow> distances;
    std::vector<double> comparison_times;
};

/// Trajectories share seed, architecture, and dataset; only eps varies.
/// Distances compare consecutive-eps layer measures at each comparison
/// time; velocity sup per eps is the C-uniform diagnostic. Grid cells may
/// run on `workers` threads; tables are assembled in list order regardless.
EpsSweepResult eps_sweep(const Architecture& arch, const SmoothingParams& base,
                         const Dataset& data, const LossSpec& loss,
                         const RunConfig& cfg, std::span<const double> eps_list,
                         std::span<const double> comparison_times,
                         int workers = 1);

struct WidthSweepResult {
    std::vector<int> widths;
    std::vector<SweepDistanceRow> distances;
    std::vector<double> comparison_times;
};

/// Hidden widths increase along the list; the counter-based initializer
/// makes narrower ensembles exact prefixes of wider ones (nested-seed
/// protocol), so distances isolate the width effect.
WidthSweepResult width_sweep(const Architecture& base,
                             const SmoothingParams& p, const Dataset& data,
                             const LossSpec& loss, const RunConfig& cfg,
                             std::span<const int> widths,
                             std::span<const double> comparison_times,
                             int workers = 1);

/// Default comparison grid {0, T/4, T/2, 3T/4, T}.
std::vector<double> default_comparison_times(double horizon);

} // namespace bitflow
