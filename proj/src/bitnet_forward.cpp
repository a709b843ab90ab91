#include "bitflow/bitnet_forward.hpp"

#include "bitflow/errors.hpp"
#include "bitflow/reduction.hpp"
#include "bitflow/rng.hpp"

#include <cmath>
#include <vector>

namespace bitflow {

double Activation::apply(double z) const {
    switch (kind) {
        case ActivationKind::Tanh: return std::tanh(z);
        case ActivationKind::Identity: return z;
    }
    return z;
}

double Activation::deriv(double z) const {
    switch (kind) {
        case ActivationKind::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case ActivationKind::Identity: return 1.0;
    }
    return 1.0;
}

double Activation::lip() const { return 1.0; }

double Activation::curvature() const {
    // sup |tanh''| is attained at tanh(z) = 1/sqrt(3).
    return kind == ActivationKind::Tanh ? 4.0 / (3.0 * std::sqrt(3.0)) : 0.0;
}

double Activation::affine() const { return 1.0; }

void Architecture::validate() const {
    if (layers.empty()) throw ShapeError("Architecture: at least one layer required");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].fan_in <= 0 || layers[l].width <= 0)
            throw ShapeError("Architecture: dimensions must be positive");
        if (l > 0 && layers[l].fan_in != layers[l - 1].width)
            throw ShapeError("Architecture: fan-in of layer " + std::to_string(l + 1) +
                             " must equal width of layer " + std::to_string(l));
    }
}

Architecture Architecture::mlp(int input_dim, const std::vector<int>& hidden,
                               int output_dim, ActivationKind hidden_act,
                               ActivationKind output_act) {
    Architecture a;
    int fan_in = input_dim;
    for (int h : hidden) {
        a.layers.push_back({fan_in, h, hidden_act});
        fan_in = h;
    }
    a.layers.push_back({fan_in, output_dim, output_act});
    a.validate();
    return a;
}

Architecture Architecture::with_hidden_width(int width) const {
    Architecture a = *this;
    for (std::size_t l = 0; l + 1 < a.layers.size(); ++l) {
        a.layers[l].width = width;
        a.layers[l + 1].fan_in = width;
    }
    a.validate();
    return a;
}

void NetworkState::validate() const {
    arch.validate();
    smoothing.validate();
    if (weights.size() != arch.layers.size())
        throw ShapeError("NetworkState: weight count does not match depth");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != arch.layers[l].width ||
            weights[l].cols() != arch.layers[l].fan_in)
            throw ShapeError("NetworkState: weight shape mismatch at layer " +
                             std::to_string(l + 1));
        if (!weights[l].allFinite())
            throw NumericalError("NetworkState: non-finite weight entries at layer " +
                                 std::to_string(l + 1));
    }
}

double beta_scale(const WeightMatrix& w, const SmoothingParams& p) {
    const WeightMatrix proj = zero_mean_project(w);
    std::vector<double> terms(static_cast<std::size_t>(proj.size()));
    const double* data = proj.data();
    for (std::size_t i = 0; i < terms.size(); ++i)
        terms[i] = smooth_abs(data[i], p.epsilon);
    return pairwise_mean(terms);
}

WeightMatrix quantize_weights(const WeightMatrix& w, const SmoothingParams& p) {
    WeightMatrix out = zero_mean_project(w);
    double* data = out.data();
    for (Eigen::Index i = 0; i < out.size(); ++i)
        data[i] = smooth_sign(data[i], p.epsilon);
    return out;
}

namespace {

LayerTrace layer_forward_traced(const Eigen::VectorXd& x, const WeightMatrix& w,
                                const SmoothingParams& p, const Activation& act) {
    if (x.size() != w.cols())
        throw ShapeError("layer_forward: input dim " + std::to_string(x.size()) +
                         " does not match fan-in " + std::to_string(w.cols()));
    LayerTrace t;
    t.input = x;
    t.gamma = gamma_eps(x, p.epsilon);
    t.gamma_argmax = gamma_eps_argmax(x);
    t.gamma_max_branch = x.cwiseAbs().maxCoeff() >= p.epsilon;
    t.scaled_arg = x * (p.q_b / t.gamma);
    t.quant_input.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        t.quant_input[i] =
            clip_value(t.scaled_arg[i], p.clip_lo(), p.clip_hi(), p.epsilon, p.clip);
    t.projected = zero_mean_project(w);
    t.quant_weights = t.projected;
    for (Eigen::Index i = 0; i < t.quant_weights.size(); ++i)
        t.quant_weights.data()[i] = smooth_sign(t.quant_weights.data()[i], p.epsilon);
    {
        std::vector<double> terms(static_cast<std::size_t>(t.projected.size()));
        for (std::size_t i = 0; i < terms.size(); ++i)
            terms[i] = smooth_abs(t.projected.data()[i], p.epsilon);
        t.beta = pairwise_mean(terms);
    }
    t.pre_activation = t.beta * (t.quant_weights * t.quant_input);
    t.output.resize(t.pre_activation.size());
    for (Eigen::Index i = 0; i < t.output.size(); ++i)
        t.output[i] = act.apply(t.pre_activation[i]);
    return t;
}

} // namespace

Eigen::VectorXd layer_forward(const Eigen::VectorXd& x, const WeightMatrix& w,
                              const SmoothingParams& p, const Activation& act) {
    return layer_forward_traced(x, w, p, act).output;
}

std::pair<Eigen::VectorXd, ForwardTrace> network_forward(
    const Eigen::VectorXd& x, const NetworkState& s) {
    if (x.size() != s.arch.input_dim())
        throw ShapeError("network_forward: input dim mismatch");
    ForwardTrace trace;
    trace.layers.reserve(s.weights.size());
    Eigen::VectorXd h = x;
    for (std::size_t l = 0; l < s.weights.size(); ++l) {
        Activation act{s.arch.layers[l].activation};
        trace.layers.push_back(layer_forward_traced(h, s.weights[l], s.smoothing, act));
        h = trace.layers.back().output;
    }
    return {h, std::move(trace)};
}

double forward_lipschitz_bound(const Architecture& arch,
                               const SmoothingParams& p, double m_star) {
    const double c_beta = std::hypot(2.0 * m_star, p.epsilon);
    const double qb_over_eps = p.q_b / p.epsilon;
    double bound = 0.0;  // L^(0)
    for (const LayerSpec& layer : arch.layers) {
        const double c = Activation{layer.activation}.lip();
        const double nm = std::sqrt(static_cast<double>(layer.width) *
                                    static_cast<double>(layer.fan_in));
        bound = c * (p.q_b + c_beta * qb_over_eps + c_beta * nm * qb_over_eps * bound);
    }
    return bound;
}

double estimate_forward_lipschitz(const NetworkState& s, const Dataset& data,
                                  int trials, std::uint64_t seed, double radius) {
    if (trials < 1) throw DomainError("estimate_forward_lipschitz: trials must be >= 1");
    s.validate();
    Rng rng(seed);
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int row = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(data.size()));
        const Eigen::VectorXd x = data.inputs.row(row).transpose();

        NetworkState perturbed = s;
        double denom = 0.0;
        for (auto& w : perturbed.weights) {
            WeightMatrix dir(w.rows(), w.cols());
            for (Eigen::Index i = 0; i < dir.size(); ++i)
                dir.data()[i] = rng.gaussian();
            const double norm = dir.norm();
            if (norm == 0.0) continue;
            dir *= radius / norm;
            w += dir;
            denom += dir.norm();
        }
        if (denom <= 0.0) continue;  // degenerate pair: skip

        const Eigen::VectorXd f0 = network_forward(x, s).first;
        const Eigen::VectorXd f1 = network_forward(x, perturbed).first;
        const double ratio = (f1 - f0).norm() / denom;
        if (ratio > best) best = ratio;
    }
    return best;
}

} // namespace bitflow
