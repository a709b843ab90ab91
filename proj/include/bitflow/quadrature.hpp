#pragma once

#include <functional>

namespace bitflow {

struct QuadratureResult {
    double value = 0.0;
    double error_bound = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Adaptive Gauss-Kronrod (G7,K15) integration of f over [a,b].
/// Intervals are bisected until the local K15-G7 discrepancy is below the
/// tolerance share of the interval.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol,
                           int max_intervals = 4000);

/// Integral of phi(z) * sgn_eps'(z) over the whole real line.
/// Quadrature runs on [-20*eps, 20*eps]; the remainder is covered by the
/// exponential envelope of sgn_eps', which contributes at most
/// 4*exp(-40)*phi_sup and is added to the reported error bound.
QuadratureResult integrate_against_sign_deriv(
    const std::function<double(double)>& phi, double eps, double phi_sup,
    double abs_tol = 1e-12);

} // namespace bitflow
