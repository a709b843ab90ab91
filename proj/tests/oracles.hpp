// Test-only reference implementations, kept independent of the library
// internals they are used to check: straight-line formula evaluations with
// naive loops and brute-force enumeration.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

/// Straight-line evaluation of the smoothed layer map: mean subtraction,
/// tanh sign, L1 scale, absmax clip quantizer, matrix product, activation.
inline Eigen::VectorXd layer_forward(const Eigen::VectorXd& x,
                                     const Eigen::MatrixXd& w, double eps,
                                     int bits, double delta, bool tanh_act) {
    const int n = static_cast<int>(w.rows());
    const int m = static_cast<int>(w.cols());
    const double qb = std::pow(2.0, bits - 1);

    double mean = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) mean += w(i, j);
    mean /= static_cast<double>(n) * m;

    Eigen::MatrixXd proj(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) proj(i, j) = w(i, j) - mean;

    double beta = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            beta += std::sqrt(proj(i, j) * proj(i, j) + eps * eps);
    beta /= static_cast<double>(n) * m;

    double max_abs = 0.0;
    for (int j = 0; j < m; ++j) max_abs = std::max(max_abs, std::abs(x[j]));
    const double gamma = std::max(eps, max_abs);

    const double lo = -qb + delta;
    const double hi = qb - delta;
    Eigen::VectorXd q(m);
    for (int j = 0; j < m; ++j) {
        const double t = x[j] * qb / gamma;
        q[j] = lo + (hi - lo) / (1.0 + std::exp(-(t - lo) / eps));
    }

    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        double z = 0.0;
        for (int j = 0; j < m; ++j) z += std::tanh(proj(i, j) / eps) * q[j];
        z *= beta;
        out[i] = tanh_act ? std::tanh(z) : z;
    }
    return out;
}

/// Minimum mean transport cost between equal-size uniform point clouds by
/// enumerating all assignments. power 1 returns W1, power 2 returns W2.
inline double brute_force_wasserstein(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b, int power) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = (a.row(i) - b.row(perm[i])).norm();
            total += power == 1 ? d : d * d;
        }
        best = std::min(best, total / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return power == 1 ? best : std::sqrt(best);
}

} // namespace oracle
