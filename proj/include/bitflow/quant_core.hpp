#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>

namespace bitflow {

/// Which smooth clip backs the activation quantizer. Logistic is the
/// primary sigmoid-based form; Interior is a soft-min/max composition that
/// approaches the identity inside (a,b) as the smoothing scale shrinks.
/// The two differ materially for small eps (the logistic form steepens
/// into a step at the left edge); both are kept so the discrepancy stays
/// observable.
enum class ClipVariant { Logistic, Interior };

/// Fixed surrogate parameters (eps, b, Q_b, delta) shared by the smooth
/// quantizers of a network.
struct SmoothingParams {
    double epsilon = 0.5;  // in (0, 1]
    int bits = 2;          // >= 1
    double q_b = 2.0;      // = 2^(bits-1), kept explicit for reporting
    double delta = 0.25;   // in (0, 1)
    ClipVariant clip = ClipVariant::Logistic;

    static SmoothingParams create(double epsilon, int bits, double delta,
                                  ClipVariant clip = ClipVariant::Logistic);

    /// Lower/upper clip bounds of the activation quantizer.
    double clip_lo() const { return -q_b + delta; }
    double clip_hi() const { return q_b - delta; }

    void validate() const;
};

/// Overflow-safe logistic 1/(1+exp(-u)) and its derivative.
double logistic(double u);
double logistic_deriv(double u);

/// tanh(z/eps); odd, strictly increasing, range (-1,1).
double smooth_sign(double z, double eps);

/// (1/eps) sech^2(z/eps); nonnegative, bounded by 1/eps and by the
/// envelope (4/eps) exp(-2|z|/eps).
double smooth_sign_deriv(double z, double eps);

/// sqrt(z^2 + eps^2); even, 1-Lipschitz, minimum eps at z = 0.
double smooth_abs(double z, double eps);
double smooth_abs_deriv(double z, double eps);

/// a + (b-a) * logistic((x-a)/eps); range (a,b). Not symmetric in x: the
/// transition is anchored at the left endpoint.
double smooth_clip(double x, double a, double b, double eps);
double smooth_clip_deriv(double x, double a, double b, double eps);

/// Soft-min/soft-max composition; tends to the hard clip as eps -> 0 and
/// to the identity strictly inside (a,b).
double smooth_clip_interior(double x, double a, double b, double eps);
double smooth_clip_interior_deriv(double x, double a, double b, double eps);

double clip_value(double x, double a, double b, double eps, ClipVariant v);
double clip_deriv(double x, double a, double b, double eps, ClipVariant v);

/// max(eps, |x|_inf). 1-Lipschitz in the max norm.
double gamma_eps(std::span<const double> x, double eps);
double gamma_eps(const Eigen::VectorXd& x, double eps);

/// Index of the entry attaining |x|_inf; lowest index wins ties.
std::size_t gamma_eps_argmax(std::span<const double> x);
std::size_t gamma_eps_argmax(const Eigen::VectorXd& x);

/// Componentwise clip(x_i * Q_b / gamma_eps(x); -Q_b+delta, Q_b-delta).
/// With the logistic variant every output is strictly inside the bounds.
Eigen::VectorXd quant_activation(const Eigen::VectorXd& x,
                                 const SmoothingParams& p);

} // namespace bitflow
