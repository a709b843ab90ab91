#include <doctest.h>

#include "bitflow/constraint_algebra.hpp"
#include "bitflow/errors.hpp"
#include "bitflow/reduction.hpp"
#include "bitflow/rng.hpp"

#include <cmath>

using namespace bitflow;

namespace {

WeightMatrix random_matrix(int n, int m, Rng& rng) {
    WeightMatrix w(n, m);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
    return w;
}

} // namespace

TEST_CASE("layer_mean on known matrices") {
    CHECK(layer_mean(WeightMatrix::Constant(3, 5, 2.5)) == doctest::Approx(2.5).epsilon(0));
    CHECK(layer_mean(WeightMatrix::Zero(4, 4)) == 0.0);
    CHECK(layer_mean(WeightMatrix::Identity(2, 2)) == 0.5);
}

TEST_CASE("zero_mean_project on known matrices") {
    const WeightMatrix c = WeightMatrix::Constant(3, 3, 1.7);
    CHECK(zero_mean_project(c).cwiseAbs().maxCoeff() == 0.0);

    WeightMatrix id = WeightMatrix::Identity(2, 2);
    const WeightMatrix p = zero_mean_project(id);
    CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(0));
    CHECK(p(0, 1) == doctest::Approx(-0.5).epsilon(0));
    CHECK(p(1, 0) == doctest::Approx(-0.5).epsilon(0));
    CHECK(p(1, 1) == doctest::Approx(0.5).epsilon(0));
}

TEST_CASE("projection is idempotent and self-adjoint") {
    Rng rng(23);
    for (int k = 0; k < 100; ++k) {
        const int n = 1 + static_cast<int>(rng.raw() % 32);
        const int m = 1 + static_cast<int>(rng.raw() % 32);
        const WeightMatrix w = random_matrix(n, m, rng);
        const WeightMatrix a = random_matrix(n, m, rng);
        const WeightMatrix p = zero_mean_project(w);

        // idempotence, already zero-mean input is unchanged
        CHECK((zero_mean_project(p) - p).cwiseAbs().maxCoeff() <= 1e-14);

        // self-adjointness
        CHECK(std::abs(compensated_dot(a, p) -
                       compensated_dot(zero_mean_project(a), w)) <= 1e-12);

        // orthogonality
        CHECK(std::abs(pairwise_sum(p)) <= 1e-12 * n * m);

        // residual mean near machine epsilon
        CHECK(std::abs(layer_mean(p)) <= 1e-15);
    }
}

TEST_CASE("pythagorean split of the squared Frobenius norm") {
    Rng rng(29);
    for (int k = 0; k < 100; ++k) {
        const int n = 1 + static_cast<int>(rng.raw() % 64);
        const int m = 1 + static_cast<int>(rng.raw() % 64);
        const WeightMatrix w = random_matrix(n, m, rng);
        const double alpha = layer_mean(w);
        const WeightMatrix p = zero_mean_project(w);
        const double lhs = compensated_dot(w, w);
        const double rhs = n * m * alpha * alpha + compensated_dot(p, p);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * lhs);
    }
}

TEST_CASE("shift isometry") {
    const WeightMatrix z = WeightMatrix::Zero(3, 4);
    const WeightMatrix shifted = shift_isometry(z, 2.0);
    CHECK(shifted.minCoeff() == 2.0);
    CHECK(shifted.maxCoeff() == 2.0);
    CHECK(layer_mean(shifted) == doctest::Approx(2.0).epsilon(0));

    Rng rng(31);
    for (int k = 0; k < 50; ++k) {
        const WeightMatrix a = zero_mean_project(random_matrix(6, 7, rng));
        const WeightMatrix b = zero_mean_project(random_matrix(6, 7, rng));
        const double c = rng.uniform(-2.0, 2.0);
        // distance preservation
        CHECK((shift_isometry(a, c) - shift_isometry(b, c)).norm() ==
              doctest::Approx((a - b).norm()).epsilon(1e-14));
    }

    // reconstruction: W = T_{alpha}(P(W))
    const WeightMatrix w = random_matrix(5, 5, rng);
    const WeightMatrix rebuilt = shift_isometry(zero_mean_project(w), layer_mean(w));
    CHECK((rebuilt - w).cwiseAbs().maxCoeff() <= 1e-14);

    // precondition: non-zero-mean input rejected
    CHECK_THROWS_AS(shift_isometry(WeightMatrix::Constant(2, 2, 1.0), 0.5), DomainError);
}
