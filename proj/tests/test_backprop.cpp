#include <doctest.h>

#include "bitflow/backprop.hpp"
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

Dataset random_dataset(int n, int d, int out, Rng& rng) {
    Dataset data;
    data.inputs.resize(n, d);
    data.targets.resize(n, out);
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i)
        data.inputs.data()[i] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < data.targets.size(); ++i)
        data.targets.data()[i] = rng.uniform(-1.0, 1.0);
    return data;
}

std::vector<WeightMatrix> fd_gradient(NetworkState s, const Dataset& data,
                                      const LossSpec& loss) {
    std::vector<WeightMatrix> grads;
    for (std::size_t l = 0; l < s.weights.size(); ++l) {
        WeightMatrix g(s.weights[l].rows(), s.weights[l].cols());
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            double& w = s.weights[l].data()[k];
            const double saved = w;
            const double h = 1e-6 * std::max(1.0, std::abs(saved));
            w = saved + h;
            const double rp = risk(s, data, loss);
            w = saved - h;
            const double rm = risk(s, data, loss);
            w = saved;
            g.data()[k] = (rp - rm) / (2.0 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

} // namespace

TEST_CASE("risk basics") {
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);
    const LossSpec loss = LossSpec::squared_error(1.0);

    // Constant weights make every output zero; zero targets give zero risk.
    NetworkState s;
    s.arch = Architecture::mlp(2, {3}, 1);
    s.smoothing = p;
    s.weights = {WeightMatrix::Constant(3, 2, 0.7), WeightMatrix::Constant(1, 3, -0.2)};

    Dataset zeros;
    zeros.inputs = Eigen::MatrixXd::Random(8, 2);
    zeros.targets = Eigen::MatrixXd::Zero(8, 1);
    CHECK(risk(s, zeros, loss) == 0.0);

    // Single sample: exactly the per-sample loss.
    Rng rng(61);
    const NetworkState s2 = make_state(s.arch, p, 0.8, rng);
    Dataset one = random_dataset(1, 2, 1, rng);
    const Eigen::VectorXd f = network_forward(one.inputs.row(0).transpose(), s2).first;
    CHECK(risk(s2, one, loss) ==
          doctest::Approx(0.5 * std::pow(f[0] - one.targets(0, 0), 2)).epsilon(1e-15));

    // Two samples: plain average.
    Dataset two = random_dataset(2, 2, 1, rng);
    const double r0 = loss.value(network_forward(two.inputs.row(0).transpose(), s2).first,
                                 two.targets.row(0).transpose());
    const double r1 = loss.value(network_forward(two.inputs.row(1).transpose(), s2).first,
                                 two.targets.row(1).transpose());
    CHECK(risk(s2, two, loss) == doctest::Approx(0.5 * (r0 + r1)).epsilon(1e-15));

    Dataset empty;
    empty.inputs.resize(0, 2);
    empty.targets.resize(0, 1);
    CHECK_THROWS_AS(risk(s2, empty, loss), DomainError);
}

TEST_CASE("hand-derived closed form for the 1x2 identity-activation case") {
    const double eps = 0.5;
    const SmoothingParams p = SmoothingParams::create(eps, 2, 0.25);
    const LossSpec loss = LossSpec::squared_error(1.0);

    NetworkState s;
    s.arch = Architecture::mlp(2, {}, 1);  // single identity layer
    s.smoothing = p;
    WeightMatrix w(1, 2);
    const double w1 = 0.7, w2 = -0.3;
    w << w1, w2;
    s.weights.push_back(w);

    Dataset data;
    data.inputs.resize(1, 2);
    data.inputs << 0.5, -0.2;
    data.targets.resize(1, 1);
    data.targets << 0.1;

    // Straight-line evaluation of the chain rule:
    //   p = (w1-w2)/2, beta = sqrt(p^2+eps^2), s = tanh(p/eps),
    //   f = beta * s * (q1-q2),
    //   df/dw1 = (q1-q2)/2 * [ p/sqrt(p^2+eps^2) * s + beta * sech^2(p/eps)/eps ].
    const double pv = (w1 - w2) / 2.0;
    const double beta = std::hypot(pv, eps);
    const double sg = std::tanh(pv / eps);
    const Eigen::VectorXd q = quant_activation(data.inputs.row(0).transpose(), p);
    const double diff = q[0] - q[1];
    const double f = beta * sg * diff;
    const double sech = 1.0 / std::cosh(pv / eps);
    const double dfdw1 =
        diff / 2.0 * (pv / beta * sg + beta * sech * sech / eps);
    const double u = f - data.targets(0, 0);

    const RiskGradient g = risk_gradient(s, data, loss);
    CHECK(g.risk == doctest::Approx(0.5 * u * u).epsilon(1e-14));
    CHECK(g.layers[0](0, 0) == doctest::Approx(u * dfdw1).epsilon(1e-12));
    CHECK(g.layers[0](0, 1) == doctest::Approx(-u * dfdw1).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(67);
    const LossSpec loss = LossSpec::squared_error(1.0);
    const std::vector<Architecture> nets = {
        Architecture::mlp(2, {3}, 1),
        Architecture::mlp(3, {4, 3}, 1),
        Architecture::mlp(2, {4, 4}, 1),
    };
    for (double eps : {1.0, 0.3, 0.05}) {
        for (const Architecture& arch : nets) {
            const SmoothingParams p = SmoothingParams::create(eps, 2, 0.25);
            const NetworkState s = make_state(arch, p, 0.8, rng);
            const Dataset data = random_dataset(6, arch.input_dim(), 1, rng);
            const RiskGradient g = risk_gradient(s, data, loss);
            const auto fd = fd_gradient(s, data, loss);
            for (std::size_t l = 0; l < g.layers.size(); ++l) {
                for (Eigen::Index k = 0; k < g.layers[l].size(); ++k) {
                    const double a = g.layers[l].data()[k];
                    const double f = fd[l].data()[k];
                    if (std::abs(a) < 1e-10) {
                        CHECK(std::abs(a - f) <= 1e-8);
                    } else {
                        CHECK(std::abs(a - f) / std::abs(a) <= 1e-5);
                    }
                }
            }
        }
    }
}

TEST_CASE("gradient respects both gamma branches") {
    Rng rng(71);
    const LossSpec loss = LossSpec::squared_error(1.0);
    const Architecture arch = Architecture::mlp(3, {3}, 1);
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);
    const NetworkState s = make_state(arch, p, 0.8, rng);

    // Inputs well inside the eps ball exercise the constant-gamma branch;
    // larger inputs exercise the max branch. Both must pass FD.
    for (double scale : {0.1, 2.0}) {
        Dataset data;
        data.inputs = scale * Eigen::MatrixXd::Random(4, 3);
        data.targets = Eigen::MatrixXd::Random(4, 1);
        const RiskGradient g = risk_gradient(s, data, loss);
        const auto fd = fd_gradient(s, data, loss);
        for (std::size_t l = 0; l < g.layers.size(); ++l)
            for (Eigen::Index k = 0; k < g.layers[l].size(); ++k) {
                const double a = g.layers[l].data()[k];
                const double f = fd[l].data()[k];
                if (std::abs(a) < 1e-10) {
                    CHECK(std::abs(a - f) <= 1e-8);
                } else {
                    CHECK(std::abs(a - f) / std::abs(a) <= 1e-5);
                }
            }
    }
}

TEST_CASE("zero-output network with zero targets is a critical point") {
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);
    const LossSpec loss = LossSpec::squared_error(1.0);
    NetworkState s;
    s.arch = Architecture::mlp(2, {3}, 1);
    s.smoothing = p;
    s.weights = {WeightMatrix::Constant(3, 2, 0.4), WeightMatrix::Constant(1, 3, -0.9)};
    Dataset data;
    data.inputs = Eigen::MatrixXd::Random(5, 2);
    data.targets = Eigen::MatrixXd::Zero(5, 1);
    const RiskGradient g = risk_gradient(s, data, loss);
    CHECK(g.risk == 0.0);
    for (const auto& layer : g.layers) CHECK(layer.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interior clip variant also passes finite differences") {
    Rng rng(73);
    const LossSpec loss = LossSpec::squared_error(1.0);
    const Architecture arch = Architecture::mlp(2, {3}, 1);
    const SmoothingParams p =
        SmoothingParams::create(0.3, 2, 0.25, ClipVariant::Interior);
    const NetworkState s = make_state(arch, p, 0.8, rng);
    const Dataset data = random_dataset(5, 2, 1, rng);
    const RiskGradient g = risk_gradient(s, data, loss);
    const auto fd = fd_gradient(s, data, loss);
    for (std::size_t l = 0; l < g.layers.size(); ++l)
        for (Eigen::Index k = 0; k < g.layers[l].size(); ++k) {
            const double a = g.layers[l].data()[k];
            const double f = fd[l].data()[k];
            if (std::abs(a) < 1e-10) {
                CHECK(std::abs(a - f) <= 1e-8);
            } else {
                CHECK(std::abs(a - f) / std::abs(a) <= 1e-5);
            }
        }
}

TEST_CASE("mean-gradient identity across summation routes") {
    Rng rng(79);
    const LossSpec loss = LossSpec::squared_error(1.0);
    const Architecture arch = Architecture::mlp(4, {8}, 1);
    const SmoothingParams p = SmoothingParams::create(0.4, 2, 0.25);
    const NetworkState s = make_state(arch, p, 0.6, rng);
    const Dataset data = random_dataset(16, 4, 1, rng);
    const RiskGradient g = risk_gradient(s, data, loss);
    for (const auto& layer : g.layers) {
        const double tree = layer_mean(layer);
        double naive = 0.0;
        for (Eigen::Index k = 0; k < layer.size(); ++k) naive += layer.data()[k];
        naive /= static_cast<double>(layer.size());
        CHECK(std::abs(tree - naive) <= 1e-14);
    }
}

TEST_CASE("gradient bound report") {
    Rng rng(83);
    const LossSpec loss = LossSpec::squared_error(1.0);
    const SmoothingParams p = SmoothingParams::create(0.5, 2, 0.25);
    const Architecture arch = Architecture::mlp(2, {3}, 1);

    // Zero-gradient state reports zero ratios.
    NetworkState s;
    s.arch = arch;
    s.smoothing = p;
    s.weights = {WeightMatrix::Constant(3, 2, 0.4), WeightMatrix::Constant(1, 3, 0.1)};
    Dataset data;
    data.inputs = Eigen::MatrixXd::Random(5, 2);
    data.targets = Eigen::MatrixXd::Zero(5, 1);
    const RiskGradient g = risk_gradient(s, data, loss);
    const GradientBoundReport report = gradient_bound_check(g, s, data, loss);
    CHECK(report.finite);
    for (double r : report.ratio) CHECK(r == 0.0);

    // Ratios stay finite across random clamped states.
    const Dataset rnd = random_dataset(8, 2, 1, rng);
    const auto fitted = fit_gradient_bound_constant(arch, p, rnd, loss, 30, 1.0, 5);
    for (double c : fitted) {
        CHECK(std::isfinite(c));
        CHECK(c >= 0.0);
    }
}

TEST_CASE("risk gradient is bit-stable across repeated evaluation") {
    Rng rng(89);
    const LossSpec loss = LossSpec::squared_error(1.0);
    const Architecture arch = Architecture::mlp(3, {5}, 1);
    const SmoothingParams p = SmoothingParams::create(0.4, 2, 0.25);
    const NetworkState s = make_state(arch, p, 0.7, rng);
    const Dataset data = random_dataset(33, 3, 1, rng);  // odd count, uneven tree
    const RiskGradient g1 = risk_gradient(s, data, loss);
    const RiskGradient g2 = risk_gradient(s, data, loss);
    CHECK(g1.risk == g2.risk);
    for (std::size_t l = 0; l < g1.layers.size(); ++l)
        CHECK((g1.layers[l] - g2.layers[l]).cwiseAbs().maxCoeff() == 0.0);
}
