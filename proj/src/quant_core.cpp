#include "bitflow/quant_core.hpp"

#include "bitflow/errors.hpp"

#include <cmath>

namespace bitflow {

namespace {

void require_finite(double z, const char* what) {
    if (!std::isfinite(z)) throw DomainError(std::string(what) + ": non-finite argument");
}

void require_eps(double eps, const char* what) {
    if (!std::isfinite(eps) || eps <= 0.0)
        throw DomainError(std::string(what) + ": eps must be positive and finite");
}

} // namespace

SmoothingParams SmoothingParams::create(double epsilon, int bits, double delta,
                                        ClipVariant clip) {
    SmoothingParams p;
    p.epsilon = epsilon;
    p.bits = bits;
    p.q_b = std::exp2(bits - 1);
    p.delta = delta;
    p.clip = clip;
    p.validate();
    return p;
}

void SmoothingParams::validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw DomainError("SmoothingParams: epsilon must lie in (0,1]");
    if (bits < 1) throw DomainError("SmoothingParams: bits must be a positive integer");
    if (q_b != std::exp2(bits - 1))
        throw DomainError("SmoothingParams: q_b must equal 2^(bits-1)");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("SmoothingParams: delta must lie in (0,1)");
    if (!(q_b - delta > 0.0))
        throw DomainError("SmoothingParams: q_b - delta must be positive");
}

double logistic(double u) {
    // Branch on sign so exp never overflows.
    if (u >= 0.0) {
        return 1.0 / (1.0 + std::exp(-u));
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

double logistic_deriv(double u) {
    const double s = logistic(u);
    return s * (1.0 - s);
}

double smooth_sign(double z, double eps) {
    require_finite(z, "smooth_sign");
    require_eps(eps, "smooth_sign");
    return std::tanh(z / eps);
}

double smooth_sign_deriv(double z, double eps) {
    require_finite(z, "smooth_sign_deriv");
    require_eps(eps, "smooth_sign_deriv");
    const double c = std::cosh(z / eps);
    if (std::isinf(c)) return 0.0;
    const double sech = 1.0 / c;
    return sech * sech / eps;
}

double smooth_abs(double z, double eps) {
    require_finite(z, "smooth_abs");
    require_eps(eps, "smooth_abs");
    return std::hypot(z, eps);
}

double smooth_abs_deriv(double z, double eps) {
    require_finite(z, "smooth_abs_deriv");
    require_eps(eps, "smooth_abs_deriv");
    return z / std::hypot(z, eps);
}

double smooth_clip(double x, double a, double b, double eps) {
    require_finite(x, "smooth_clip");
    require_eps(eps, "smooth_clip");
    if (!(a < b)) throw DomainError("smooth_clip: requires a < b");
    return a + (b - a) * logistic((x - a) / eps);
}

double smooth_clip_deriv(double x, double a, double b, double eps) {
    require_finite(x, "smooth_clip_deriv");
    require_eps(eps, "smooth_clip_deriv");
    if (!(a < b)) throw DomainError("smooth_clip_deriv: requires a < b");
    return (b - a) * logistic_deriv((x - a) / eps) / eps;
}

double smooth_clip_interior(double x, double a, double b, double eps) {
    require_finite(x, "smooth_clip_interior");
    require_eps(eps, "smooth_clip_interior");
    if (!(a < b)) throw DomainError("smooth_clip_interior: requires a < b");
    const double lo = 0.5 * (x + a + std::hypot(x - a, eps)); // soft max(x, a)
    return 0.5 * (lo + b - std::hypot(lo - b, eps));          // soft min(., b)
}

double smooth_clip_interior_deriv(double x, double a, double b, double eps) {
    require_finite(x, "smooth_clip_interior_deriv");
    require_eps(eps, "smooth_clip_interior_deriv");
    if (!(a < b)) throw DomainError("smooth_clip_interior_deriv: requires a < b");
    const double lo = 0.5 * (x + a + std::hypot(x - a, eps));
    const double dlo = 0.5 * (1.0 + (x - a) / std::hypot(x - a, eps));
    const double dout = 0.5 * (1.0 - (lo - b) / std::hypot(lo - b, eps));
    return dout * dlo;
}

double clip_value(double x, double a, double b, double eps, ClipVariant v) {
    return v == ClipVariant::Logistic ? smooth_clip(x, a, b, eps)
                                      : smooth_clip_interior(x, a, b, eps);
}

double clip_deriv(double x, double a, double b, double eps, ClipVariant v) {
    return v == ClipVariant::Logistic ? smooth_clip_deriv(x, a, b, eps)
                                      : smooth_clip_interior_deriv(x, a, b, eps);
}

double gamma_eps(std::span<const double> x, double eps) {
    require_eps(eps, "gamma_eps");
    if (x.empty()) throw DomainError("gamma_eps: empty vector");
    double max_abs = 0.0;
    for (double v : x) {
        require_finite(v, "gamma_eps");
        const double a = std::abs(v);
        if (a > max_abs) max_abs = a;
    }
    return max_abs > eps ? max_abs : eps;
}

double gamma_eps(const Eigen::VectorXd& x, double eps) {
    return gamma_eps(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), eps);
}

std::size_t gamma_eps_argmax(std::span<const double> x) {
    if (x.empty()) throw DomainError("gamma_eps_argmax: empty vector");
    std::size_t best = 0;
    double best_abs = std::abs(x[0]);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double a = std::abs(x[i]);
        if (a > best_abs) {  // strict: lowest index wins ties
            best_abs = a;
            best = i;
        }
    }
    return best;
}

std::size_t gamma_eps_argmax(const Eigen::VectorXd& x) {
    return gamma_eps_argmax(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd quant_activation(const Eigen::VectorXd& x,
                                 const SmoothingParams& p) {
    if (x.size() == 0) throw DomainError("quant_activation: empty input");
    const double g = gamma_eps(x, p.epsilon);
    const double lo = p.clip_lo();
    const double hi = p.clip_hi();
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out[i] = clip_value(x[i] * p.q_b / g, lo, hi, p.epsilon, p.clip);
    }
    return out;
}

} // namespace bitflow
