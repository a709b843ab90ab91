#include <doctest.h>

#include "bitflow/errors.hpp"
#include "bitflow/meanfield_analysis.hpp"
#include "bitflow/rng.hpp"
#include "bitflow/transport.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace bitflow;

namespace {

EmpiricalMeasure random_measure(int n, int dim, Rng& rng, double scale = 1.0) {
    Eigen::MatrixXd atoms(n, dim);
    for (Eigen::Index i = 0; i < atoms.size(); ++i)
        atoms.data()[i] = rng.uniform(-scale, scale);
    return {atoms};
}

} // namespace

TEST_CASE("dirac and simple 1d cases") {
    Eigen::MatrixXd a(1, 3), b(1, 3);
    a << 0.1, 0.2, 0.3;
    b << 0.1, 0.2, 0.3;
    CHECK(wasserstein1({a}, {b}) == 0.0);
    CHECK(wasserstein2({a}, {b}) == 0.0);

    b << 1.1, 0.2, 0.3;
    CHECK(wasserstein1({a}, {b}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(wasserstein2({a}, {b}) == doctest::Approx(1.0).epsilon(1e-14));

    // 1d atoms {0,1} vs {0,0}: monotone coupling moves half the mass by 1.
    Eigen::MatrixXd x(2, 1), y(2, 1);
    x << 0.0, 1.0;
    y << 0.0, 0.0;
    CHECK(wasserstein1({x}, {y}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(wasserstein2({x}, {y}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("translation optimality for equal point clouds") {
    Rng rng(131);
    for (int k = 0; k < 20; ++k) {
        const int n = 2 + static_cast<int>(rng.raw() % 6);
        const int dim = 2 + static_cast<int>(rng.raw() % 3);
        const EmpiricalMeasure mu = random_measure(n, dim, rng);
        Eigen::VectorXd shift(dim);
        for (int j = 0; j < dim; ++j) shift[j] = rng.uniform(-1.0, 1.0);
        Eigen::MatrixXd moved = mu.atoms;
        moved.rowwise() += shift.transpose();
        CHECK(wasserstein2(mu, {moved}) ==
              doctest::Approx(shift.norm()).epsilon(1e-12));
    }
}

TEST_CASE("assignment solver matches brute-force enumeration") {
    Rng rng(137);
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(rng.raw() % 7);  // up to 8 atoms
        const int dim = 2 + static_cast<int>(rng.raw() % 2);
        const EmpiricalMeasure mu = random_measure(n, dim, rng);
        const EmpiricalMeasure nu = random_measure(n, dim, rng);
        CHECK(wasserstein1(mu, nu) ==
              doctest::Approx(oracle::brute_force_wasserstein(mu.atoms, nu.atoms, 1))
                  .epsilon(1e-10));
        CHECK(wasserstein2(mu, nu) ==
              doctest::Approx(oracle::brute_force_wasserstein(mu.atoms, nu.atoms, 2))
                  .epsilon(1e-10));
    }
}

TEST_CASE("1d solver agrees with the assignment route") {
    Rng rng(139);
    for (int k = 0; k < 30; ++k) {
        const int n = 2 + static_cast<int>(rng.raw() % 7);
        Eigen::MatrixXd a(n, 1), b(n, 1);
        for (int i = 0; i < n; ++i) {
            a(i, 0) = rng.uniform(-2.0, 2.0);
            b(i, 0) = rng.uniform(-2.0, 2.0);
        }
        // Brute force accepts any dimension, including 1.
        CHECK(wasserstein1({a}, {b}) ==
              doctest::Approx(oracle::brute_force_wasserstein(a, b, 1)).epsilon(1e-12));
        CHECK(wasserstein2({a}, {b}) ==
              doctest::Approx(oracle::brute_force_wasserstein(a, b, 2)).epsilon(1e-12));
    }
}

TEST_CASE("transportation LP agrees with lcm expansion on unequal sizes") {
    Rng rng(149);
    for (int k = 0; k < 20; ++k) {
        const int n = 2 + static_cast<int>(rng.raw() % 4);  // 2..5
        const int m = 2 + static_cast<int>(rng.raw() % 4);
        const int dim = 2;
        const EmpiricalMeasure mu = random_measure(n, dim, rng);
        const EmpiricalMeasure nu = random_measure(m, dim, rng);

        // Expand both to lcm(n,m) equal-mass atoms and solve exactly by
        // assignment; nothing here touches the LP code path.
        const int lcm = std::lcm(n, m);
        Eigen::MatrixXd ax(lcm, dim), bx(lcm, dim);
        for (int i = 0; i < lcm; ++i) {
            ax.row(i) = mu.atoms.row(i / (lcm / n));
            bx.row(i) = nu.atoms.row(i / (lcm / m));
        }
        for (int power : {1, 2}) {
            Eigen::MatrixXd cost(lcm, lcm);
            for (int i = 0; i < lcm; ++i)
                for (int j = 0; j < lcm; ++j) {
                    const double d = (ax.row(i) - bx.row(j)).norm();
                    cost(i, j) = power == 1 ? d : d * d;
                }
            const double expected_cost = assignment_min_cost(cost) / lcm;
            const double expected =
                power == 1 ? expected_cost : std::sqrt(expected_cost);
            const double got =
                power == 1 ? wasserstein1(mu, nu) : wasserstein2(mu, nu);
            CHECK(got == doctest::Approx(expected).epsilon(1e-10));
        }
    }
}

TEST_CASE("metric axioms on random triples") {
    Rng rng(151);
    for (int k = 0; k < 60; ++k) {
        const int dim = 1 + static_cast<int>(rng.raw() % 3);
        const EmpiricalMeasure mu = random_measure(2 + static_cast<int>(rng.raw() % 5), dim, rng);
        const EmpiricalMeasure nu = random_measure(2 + static_cast<int>(rng.raw() % 5), dim, rng);
        const EmpiricalMeasure ka = random_measure(2 + static_cast<int>(rng.raw() % 5), dim, rng);
        for (auto dist : {wasserstein1, wasserstein2}) {
            CHECK(std::abs(dist(mu, nu) - dist(nu, mu)) <= 1e-12);
            CHECK(dist(mu, ka) <= dist(mu, nu) + dist(nu, ka) + 1e-10);
            CHECK(dist(mu, mu) <= 1e-15);
        }
        CHECK(wasserstein1(mu, nu) <= wasserstein2(mu, nu) * (1.0 + 1e-12) + 1e-15);
    }
}

TEST_CASE("error paths") {
    Rng rng(157);
    const EmpiricalMeasure a = random_measure(3, 2, rng);
    const EmpiricalMeasure b = random_measure(3, 3, rng);
    CHECK_THROWS_AS(wasserstein1(a, b), ShapeError);

    CHECK_THROWS_AS(transport_min_cost(Eigen::MatrixXd::Zero(1100, 1001)),
                    CapacityError);
}

TEST_CASE("assignment solver on a known cost matrix") {
    // Classic 3x3 with a unique optimum.
    Eigen::MatrixXd cost(3, 3);
    cost << 4, 1, 3,
            2, 0, 5,
            3, 2, 2;
    std::vector<int> match;
    const double total = assignment_min_cost(cost, &match);
    CHECK(total == doctest::Approx(5.0).epsilon(0));  // 1 + 2 + 2
    CHECK(match[0] == 1);
    CHECK(match[1] == 0);
    CHECK(match[2] == 2);
}

TEST_CASE("quantile coupling handles unequal sizes exactly") {
    // {0, 1} (mass 1/2 each) vs {0} : half the mass travels distance 1.
    CHECK(quantile_coupling_cost({0.0, 1.0}, {0.0}, 1) ==
          doctest::Approx(0.5).epsilon(0));
    // {0,1,2} vs {0,3}: piecewise segments of the quantile functions.
    const double w1 = quantile_coupling_cost({0.0, 1.0, 2.0}, {0.0, 3.0}, 1);
    // segments: [0,1/3)->|0-0|, [1/3,1/2)->|1-0|, [1/2,2/3)->|1-3|, [2/3,1]->|2-3|
    const double expected = (1.0 / 3) * 0 + (1.0 / 6) * 1 + (1.0 / 6) * 2 + (1.0 / 3) * 1;
    CHECK(w1 == doctest::Approx(expected).epsilon(1e-15));
}
