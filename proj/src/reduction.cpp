#include "bitflow/reduction.hpp"

#include <cmath>
#include <cstdlib>

namespace bitflow {

namespace {

constexpr std::size_t kLeafSize = 8;

double sum_range(const double* xs, std::size_t n) {
    if (n <= kLeafSize) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xs[i];
        return s;
    }
    const std::size_t half = n / 2;
    return sum_range(xs, half) + sum_range(xs + half, n - half);
}

} // namespace

double pairwise_sum(std::span<const double> xs) {
    return sum_range(xs.data(), xs.size());
}

double pairwise_sum(const Eigen::MatrixXd& m) {
    return sum_range(m.data(), static_cast<std::size_t>(m.size()));
}

double pairwise_mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double compensated_dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    double comp = 0.0;
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double term = a[i] * b[i];
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

double compensated_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return compensated_dot(
        std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
        std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

namespace detail {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace detail
} // namespace bitflow
