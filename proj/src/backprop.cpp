#include "bitflow/backprop.hpp"

#include "bitflow/errors.hpp"
#include "bitflow/reduction.hpp"
#include "bitflow/rng.hpp"

#include <cmath>
#include <vector>

namespace bitflow {

LossSpec LossSpec::squared_error(double support_bound) {
    LossSpec spec;
    spec.kind = LossKind::SquaredError;
    spec.l1 = support_bound > 1.0 ? support_bound : 1.0;
    spec.l2 = 1.0;
    return spec;
}

double LossSpec::value(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const {
    if (u.size() != y.size()) throw ShapeError("LossSpec: prediction/target dim mismatch");
    return 0.5 * (u - y).squaredNorm();
}

Eigen::VectorXd LossSpec::grad(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const {
    if (u.size() != y.size()) throw ShapeError("LossSpec: prediction/target dim mismatch");
    return u - y;
}

namespace {

void require_dataset(const Dataset& data, const NetworkState& s) {
    if (data.size() == 0) throw DomainError("risk: empty dataset");
    if (data.input_dim() != s.arch.input_dim() ||
        data.target_dim() != s.arch.output_dim())
        throw ShapeError("risk: dataset dims do not match architecture");
}

// Backward pass over a stored forward trace; returns dR/dW per layer.
std::vector<WeightMatrix> backward_from_trace(const NetworkState& s,
                                              const ForwardTrace& trace,
                                              const Eigen::VectorXd& y,
                                              const LossSpec& loss) {
    const SmoothingParams& p = s.smoothing;
    const int depth = static_cast<int>(trace.layers.size());
    std::vector<WeightMatrix> grads(depth);

    Eigen::VectorXd g = loss.grad(trace.output(), y);  // dR/dh^l
    for (int l = depth - 1; l >= 0; --l) {
        const LayerTrace& t = trace.layers[l];
        const Activation act{s.arch.layers[l].activation};
        const double nm = static_cast<double>(t.projected.size());

        Eigen::VectorXd u(g.size());  // dR/dz
        for (Eigen::Index i = 0; i < g.size(); ++i)
            u[i] = g[i] * act.deriv(t.pre_activation[i]);

        // z = beta * Wq * q
        const Eigen::VectorXd wq_q = t.quant_weights * t.quant_input;
        const double a_beta = u.dot(wq_q);
        const Eigen::VectorXd a_q = t.beta * (t.quant_weights.transpose() * u);

        // Adjoint w.r.t. the projected entries, then through P (self-adjoint).
        WeightMatrix pre(t.projected.rows(), t.projected.cols());
        for (Eigen::Index i = 0; i < pre.rows(); ++i) {
            for (Eigen::Index j = 0; j < pre.cols(); ++j) {
                const double pij = t.projected(i, j);
                const double through_sign =
                    t.beta * u[i] * t.quant_input[j] * smooth_sign_deriv(pij, p.epsilon);
                const double through_beta =
                    a_beta * smooth_abs_deriv(pij, p.epsilon) / nm;
                pre(i, j) = through_sign + through_beta;
            }
        }
        grads[l] = zero_mean_project(pre);

        if (l == 0) break;

        // q_j = clip(x_j * Q_b / gamma); propagate to the previous layer.
        const Eigen::VectorXd& x = t.input;
        Eigen::VectorXd c(x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double slope =
                clip_deriv(t.scaled_arg[j], p.clip_lo(), p.clip_hi(), p.epsilon, p.clip);
            c[j] = a_q[j] * slope * (p.q_b / t.gamma);
        }
        if (t.gamma_max_branch) {
            const double pivot = x[static_cast<Eigen::Index>(t.gamma_argmax)];
            const double correction = c.dot(x) / t.gamma;
            c[static_cast<Eigen::Index>(t.gamma_argmax)] -=
                (pivot >= 0.0 ? 1.0 : -1.0) * correction;
        }
        g = c;
    }
    return grads;
}

struct Accum {
    std::vector<WeightMatrix> grads;
    double loss_sum = 0.0;
};

Accum reduce_range(const NetworkState& s, const Dataset& data,
                   const LossSpec& loss, int lo, int hi) {
    if (hi - lo == 1) {
        const Eigen::VectorXd x = data.inputs.row(lo).transpose();
        const Eigen::VectorXd y = data.targets.row(lo).transpose();
        auto [f, trace] = network_forward(x, s);
        Accum a;
        a.loss_sum = loss.value(f, y);
        a.grads = backward_from_trace(s, trace, y, loss);
        return a;
    }
    const int mid = lo + (hi - lo) / 2;
    Accum left = reduce_range(s, data, loss, lo, mid);
    Accum right = reduce_range(s, data, loss, mid, hi);
    left.loss_sum += right.loss_sum;
    for (std::size_t l = 0; l < left.grads.size(); ++l) left.grads[l] += right.grads[l];
    return left;
}

} // namespace

double risk(const NetworkState& s, const Dataset& data, const LossSpec& loss) {
    require_dataset(data, s);
    std::vector<double> values(static_cast<std::size_t>(data.size()));
    for (int i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd x = data.inputs.row(i).transpose();
        const Eigen::VectorXd y = data.targets.row(i).transpose();
        values[static_cast<std::size_t>(i)] = loss.value(network_forward(x, s).first, y);
    }
    return pairwise_mean(values);
}

std::vector<WeightMatrix> sample_gradient(const NetworkState& s,
                                          const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& y,
                                          const LossSpec& loss) {
    auto [f, trace] = network_forward(x, s);
    (void)f;
    return backward_from_trace(s, trace, y, loss);
}

RiskGradient risk_gradient(const NetworkState& s, const Dataset& data,
                           const LossSpec& loss) {
    require_dataset(data, s);
    Accum total = reduce_range(s, data, loss, 0, data.size());
    const double inv_n = 1.0 / static_cast<double>(data.size());
    RiskGradient g;
    g.risk = total.loss_sum * inv_n;
    g.layers = std::move(total.grads);
    for (auto& layer : g.layers) layer *= inv_n;
    return g;
}

GradientBoundReport gradient_bound_check(const RiskGradient& g,
                                         const NetworkState& s,
                                         const Dataset& data,
                                         const LossSpec& loss) {
    (void)loss;
    require_dataset(data, s);
    GradientBoundReport report;
    std::vector<double> norms(static_cast<std::size_t>(data.size()));
    for (int i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd x = data.inputs.row(i).transpose();
        norms[static_cast<std::size_t>(i)] = network_forward(x, s).first.norm();
    }
    report.mean_output_norm = pairwise_mean(norms);
    const double denom = 1.0 + report.mean_output_norm;
    for (const auto& layer : g.layers) {
        const double max_abs = layer.size() > 0 ? layer.cwiseAbs().maxCoeff() : 0.0;
        report.max_abs_entry.push_back(max_abs);
        report.ratio.push_back(max_abs / denom);
        if (!layer.allFinite()) report.finite = false;
    }
    return report;
}

std::vector<double> fit_gradient_bound_constant(
    const Architecture& arch, const SmoothingParams& p, const Dataset& data,
    const LossSpec& loss, int n_states, double m_star, std::uint64_t seed) {
    if (n_states < 1) throw DomainError("fit_gradient_bound_constant: n_states >= 1");
    Rng rng(seed);
    std::vector<double> fitted(arch.layers.size(), 0.0);
    for (int k = 0; k < n_states; ++k) {
        NetworkState s;
        s.arch = arch;
        s.smoothing = p;
        for (const LayerSpec& spec : arch.layers) {
            WeightMatrix w(spec.width, spec.fan_in);
            for (Eigen::Index i = 0; i < w.size(); ++i)
                w.data()[i] = rng.uniform(-m_star, m_star);
            s.weights.push_back(std::move(w));
        }
        const RiskGradient g = risk_gradient(s, data, loss);
        const GradientBoundReport report = gradient_bound_check(g, s, data, loss);
        if (!report.finite)
            throw NumericalError("fit_gradient_bound_constant: non-finite gradient");
        for (std::size_t l = 0; l < fitted.size(); ++l)
            if (report.ratio[l] > fitted[l]) fitted[l] = report.ratio[l];
    }
    return fitted;
}

} // namespace bitflow
