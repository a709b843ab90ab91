#include <doctest.h>

#include "bitflow/bitnet_forward.hpp"
#include "bitflow/errors.hpp"
#include "bitflow/rng.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace bitflow;

namespace {

NetworkState make_state(const Architecture& arch, const SmoothingParams& p,
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

} // namespace

TEST_CASE("architecture validation") {
    CHECK_THROWS_AS(Architecture{}.validate(), ShapeError);
    Architecture bad;
    bad.layers = {{4, 8, ActivationKind::Tanh}, {7, 1, ActivationKind::Identity}};
    CHECK_THROWS_AS(bad.validate(), ShapeError);

    const Architecture a = Architecture::mlp(4, {16, 8}, 1);
    CHECK(a.depth() == 3);
    CHECK(a.input_dim() == 4);
    CHECK(a.output_dim() == 1);
    CHECK(a.layers[1].fan_in == 16);

    const Architecture wide = a.with_hidden_width(32);
    CHECK(wide.layers[0].width == 32);
    CHECK(wide.layers[1].fan_in == 32);
    CHECK(wide.layers[1].width == 32);
    CHECK(wide.layers[2].fan_in == 32);
    CHECK(wide.layers[2].width == 1);
}

TEST_CASE("beta_scale closed forms") {
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);

    // Constant matrix: projection vanishes, beta collapses to eps.
    CHECK(beta_scale(WeightMatrix::Constant(4, 6, 3.0), p) ==
          doctest::Approx(0.5).epsilon(1e-15));

    // 1x2 matrix [a, -a]: both projected entries are +-a.
    const double a = 0.8;
    WeightMatrix w(1, 2);
    w << a, -a;
    CHECK(beta_scale(w, p) ==
          doctest::Approx(std::hypot(a, 0.5)).epsilon(1e-15));
}

TEST_CASE("beta_scale is Lipschitz in the weights") {
    Rng rng(37);
    const SmoothingParams p = SmoothingParams::create(0.3, 2, 0.25);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + static_cast<int>(rng.raw() % 8);
        const int m = 2 + static_cast<int>(rng.raw() % 8);
        WeightMatrix w1(n, m), w2(n, m);
        for (Eigen::Index i = 0; i < w1.size(); ++i) {
            w1.data()[i] = rng.uniform(-1.0, 1.0);
            w2.data()[i] = rng.uniform(-1.0, 1.0);
        }
        const double lhs = std::abs(beta_scale(w1, p) - beta_scale(w2, p));
        const double rhs = (w1 - w2).norm() / std::sqrt(static_cast<double>(n) * m);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("quantize_weights range and hard-sign limit") {
    const SmoothingParams p = SmoothingParams::create(0.4, 2, 0.25);
    CHECK(quantize_weights(WeightMatrix::Constant(3, 3, 2.0), p).cwiseAbs().maxCoeff() ==
          0.0);

    Rng rng(41);
    WeightMatrix w(6, 6);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
    const WeightMatrix q = quantize_weights(w, p);
    CHECK(q.cwiseAbs().maxCoeff() < 1.0);

    // eps -> 0 approaches the hard sign of the projection when no projected
    // entry sits near zero.
    WeightMatrix far(2, 4);
    far << 0.6, -0.4, 0.9, -0.7, 0.5, -0.8, 0.3, -0.4;
    const SmoothingParams tiny = SmoothingParams::create(1e-3, 2, 0.25);
    const WeightMatrix proj = zero_mean_project(far);
    const WeightMatrix qt = quantize_weights(far, tiny);
    for (Eigen::Index i = 0; i < qt.size(); ++i) {
        const double hard = proj.data()[i] > 0 ? 1.0 : -1.0;
        CHECK(std::abs(qt.data()[i] - hard) < 1e-6);
    }
}

TEST_CASE("layer_forward collapsed cases") {
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);
    const Activation tanh_act{ActivationKind::Tanh};
    const Activation id_act{ActivationKind::Identity};

    // Constant weights: quantized weights vanish, output is sigma(0) = 0.
    Eigen::VectorXd x(3);
    x << 0.4, -0.2, 0.9;
    const Eigen::VectorXd out =
        layer_forward(x, WeightMatrix::Constant(5, 3, 1.3), p, tanh_act);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);

    // 1x1 weight: the projection of a scalar matrix is always zero.
    Eigen::VectorXd x1(1);
    x1 << 0.7;
    const Eigen::VectorXd out1 =
        layer_forward(x1, WeightMatrix::Constant(1, 1, 0.9), p, id_act);
    CHECK(out1[0] == 0.0);

    Eigen::VectorXd wrong(4);
    CHECK_THROWS_AS(layer_forward(wrong, WeightMatrix::Zero(2, 3), p, id_act),
                    ShapeError);
}

TEST_CASE("layer_forward matches the straight-line oracle") {
    Rng rng(43);
    for (int k = 0; k < 50; ++k) {
        const int n = 1 + static_cast<int>(rng.raw() % 5);
        const int m = 1 + static_cast<int>(rng.raw() % 5);
        const double eps = rng.uniform(0.05, 1.0);
        const SmoothingParams p = SmoothingParams::create(eps, 2, 0.25);
        WeightMatrix w(n, m);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
        Eigen::VectorXd x(m);
        for (int j = 0; j < m; ++j) x[j] = rng.uniform(-1.0, 1.0);

        const Eigen::VectorXd got =
            layer_forward(x, w, p, Activation{ActivationKind::Tanh});
        const Eigen::VectorXd want = oracle::layer_forward(x, w, eps, 2, 0.25, true);
        for (int i = 0; i < n; ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("network_forward composes layer_forward") {
    Rng rng(47);
    const SmoothingParams p = SmoothingParams::create(0.4, 2, 0.25);
    const Architecture arch = Architecture::mlp(3, {4, 4}, 1);
    const NetworkState s = make_state(arch, p, 0.9, rng);

    Eigen::VectorXd x(3);
    x << 0.2, -0.5, 0.8;
    const auto [f, trace] = network_forward(x, s);

    Eigen::VectorXd h = x;
    for (std::size_t l = 0; l < s.weights.size(); ++l)
        h = layer_forward(h, s.weights[l], p, Activation{arch.layers[l].activation});
    CHECK(f.size() == 1);
    CHECK(f[0] == h[0]);

    // Depth-1 network reduces to a single layer_forward.
    const Architecture shallow = Architecture::mlp(3, {}, 2);
    NetworkState s1;
    s1.arch = shallow;
    s1.smoothing = p;
    s1.weights.push_back(WeightMatrix::Random(2, 3));
    const auto [f1, t1] = network_forward(x, s1);
    CHECK((f1 - layer_forward(x, s1.weights[0], p,
                              Activation{ActivationKind::Identity}))
              .cwiseAbs()
              .maxCoeff() == 0.0);

    // Trace invariants.
    for (const LayerTrace& t : trace.layers) {
        CHECK(t.quant_weights.cwiseAbs().maxCoeff() < 1.0);
        CHECK(t.beta >= p.epsilon);
        CHECK(t.output.allFinite());
    }

    Eigen::VectorXd bad(5);
    CHECK_THROWS_AS(network_forward(bad, s), ShapeError);
}

TEST_CASE("shift invariance of quantization and scale") {
    // Coarse binary-grid entries with power-of-two dims make the shifted
    // mean exact, so both maps are exactly shift invariant.
    Rng rng(53);
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);
    WeightMatrix w(4, 8);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w.data()[i] = std::floor(rng.uniform(-1.0, 1.0) * 512.0) / 512.0;
    const WeightMatrix shifted = (w.array() + 0.25).matrix();
    CHECK((quantize_weights(shifted, p) - quantize_weights(w, p))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(beta_scale(shifted, p) == beta_scale(w, p));
}

TEST_CASE("empirical Lipschitz estimate stays below the recursive bound") {
    Rng rng(59);
    const SmoothingParams p = SmoothingParams::create(0.3, 2, 0.25);
    const Architecture arch = Architecture::mlp(3, {6}, 1);
    const NetworkState s = make_state(arch, p, 0.5, rng);

    Dataset data;
    data.inputs = Eigen::MatrixXd::Random(16, 3);
    data.targets = Eigen::MatrixXd::Zero(16, 1);

    const double est = estimate_forward_lipschitz(s, data, 40, 7);
    const double bound = forward_lipschitz_bound(arch, p, 1.0);
    CHECK(est > 0.0);
    CHECK(est <= bound);

    // Depth-1 identity net against the first-layer bound.
    const Architecture shallow = Architecture::mlp(3, {}, 1);
    NetworkState s1;
    s1.arch = shallow;
    s1.smoothing = p;
    s1.weights.push_back(0.5 * WeightMatrix::Random(1, 3));
    const double est1 = estimate_forward_lipschitz(s1, data, 40, 11);
    const double c_beta = std::hypot(2.0 * 1.0, p.epsilon);
    const double l1 = p.q_b + c_beta * p.q_b / p.epsilon;  // depth-1 recursion
    CHECK(est1 <= l1);

    // Running max is monotone in the trial count.
    const double e10 = estimate_forward_lipschitz(s, data, 10, 99);
    const double e40 = estimate_forward_lipschitz(s, data, 40, 99);
    CHECK(e40 >= e10);

    // Zero perturbation radius degenerates every pair; estimate is empty max.
    CHECK(estimate_forward_lipschitz(s, data, 5, 3, 0.0) == 0.0);
}
