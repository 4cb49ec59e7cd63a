#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracact/errors.hpp"
#include "fracact/gl.hpp"
#include "fracact/tensor.hpp"

namespace fracact {

// ---------------------------------------------------------------------------
// Base activation catalog
// ---------------------------------------------------------------------------

enum class BaseKind { sigmoid, gelu_tanh, mish, relu, prelu, silu, softplus };

inline const char* to_string(BaseKind kind) {
    switch (kind) {
        case BaseKind::sigmoid: return "sigmoid";
        case BaseKind::gelu_tanh: return "gelu_tanh";
        case BaseKind::mish: return "mish";
        case BaseKind::relu: return "relu";
        case BaseKind::prelu: return "prelu";
        case BaseKind::silu: return "silu";
        case BaseKind::softplus: return "softplus";
    }
    return "?";
}

inline std::optional<BaseKind> base_kind_from_string(std::string_view name) {
    if (name == "sigmoid") return BaseKind::sigmoid;
    if (name == "gelu_tanh" || name == "gelu") return BaseKind::gelu_tanh;
    if (name == "mish") return BaseKind::mish;
    if (name == "relu") return BaseKind::relu;
    if (name == "prelu") return BaseKind::prelu;
    if (name == "silu") return BaseKind::silu;
    if (name == "softplus") return BaseKind::softplus;
    return std::nullopt;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    // max(x,0) + log1p(exp(-|x|)), stable at both tails
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// GELU tanh-approximation constants.
inline constexpr double kGeluCubic = 0.044715;
inline const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);

struct BaseEval {
    double value;
    double deriv;
};

/// Value and exact analytic first derivative of a base activation.
/// prelu_slope only matters for BaseKind::prelu.
inline BaseEval base_eval(BaseKind kind, double x, double prelu_slope = 0.25) {
    switch (kind) {
        case BaseKind::sigmoid: {
            const double s = sigmoid(x);
            return {s, s * (1.0 - s)};
        }
        case BaseKind::gelu_tanh: {
            const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
            const double t = std::tanh(u);
            const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
            return {0.5 * x * (1.0 + t),
                    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du};
        }
        case BaseKind::mish: {
            const double sp = softplus(x);
            const double t = std::tanh(sp);
            const double s = sigmoid(x);
            return {x * t, t + x * (1.0 - t * t) * s};
        }
        case BaseKind::relu:
            return x > 0.0 ? BaseEval{x, 1.0} : BaseEval{0.0, 0.0};
        case BaseKind::prelu:
            return x > 0.0 ? BaseEval{x, 1.0}
                           : BaseEval{prelu_slope * x, prelu_slope};
        case BaseKind::silu: {
            const double s = sigmoid(x);
            return {x * s, s * (1.0 + x * (1.0 - s))};
        }
        case BaseKind::softplus:
            return {softplus(x), sigmoid(x)};
    }
    throw DomainError("base_eval: unknown kind");
}

/// Wraps a base kind as a ScalarFn for the scalar GL operations.
inline ScalarFn make_scalar_fn(BaseKind kind, double prelu_slope = 0.25) {
    return ScalarFn{
        [kind, prelu_slope](double x) { return base_eval(kind, x, prelu_slope).value; },
        [kind, prelu_slope](double x) { return base_eval(kind, x, prelu_slope).deriv; },
    };
}

// ---------------------------------------------------------------------------
// Activation layer configuration
// ---------------------------------------------------------------------------

inline constexpr double kOrderMin = 0.0;
inline constexpr double kOrderMax = 2.0;
inline constexpr double kBetaMin = 1.0;
inline constexpr double kBetaMax = 10.0;

/// Configuration of one activation layer. `order` (and `falu_beta` /
/// `prelu_slope` where applicable) are the trainable scalars.
struct ActivationSpec {
    BaseKind base = BaseKind::sigmoid;
    bool fractional = false; // GL-fractional of base; sigmoid/gelu_tanh/mish only
    bool falu = false;       // closed-form FALU; base and fractional are ignored
    double order = 0.0;      // fractional order a, kept in [0, 2]
    int terms = 1;           // N
    double step = 1.0;       // h
    double falu_beta = 1.0;  // kept in [1, 10]
    double prelu_slope = 0.25;
};

inline ActivationSpec make_base(BaseKind base) {
    ActivationSpec s;
    s.base = base;
    return s;
}

/// Fractional spec with the step defaulted by the h = 1/max(1, N-1) rule.
inline ActivationSpec make_fractional(BaseKind base, double order, int terms) {
    ActivationSpec s;
    s.base = base;
    s.fractional = true;
    s.order = order;
    s.terms = terms;
    s.step = step_for_terms(terms);
    return s;
}

inline ActivationSpec make_falu(double order, double beta) {
    ActivationSpec s;
    s.falu = true;
    s.order = order;
    s.falu_beta = beta;
    return s;
}

inline bool gl_capable(BaseKind base) {
    return base == BaseKind::sigmoid || base == BaseKind::gelu_tanh ||
           base == BaseKind::mish;
}

inline void validate_spec(const ActivationSpec& spec) {
    if (spec.fractional && spec.falu)
        throw DomainError("ActivationSpec: fractional and falu are exclusive");
    if (spec.fractional && !gl_capable(spec.base))
        throw DomainError(std::string("ActivationSpec: no GL-fractional variant of ") +
                          to_string(spec.base));
    if (spec.terms < 1)
        throw DomainError("ActivationSpec: terms must be >= 1");
    if (!(spec.step > 0.0))
        throw DomainError("ActivationSpec: step must be positive");
}

/// Projects the trainable scalars back onto their boxes (a into [0,2],
/// beta into [1,10]). Applied after every optimizer step.
inline ActivationSpec clamp_params(ActivationSpec spec) {
    spec.order = std::min(std::max(spec.order, kOrderMin), kOrderMax);
    spec.falu_beta = std::min(std::max(spec.falu_beta, kBetaMin), kBetaMax);
    return spec;
}

// ---------------------------------------------------------------------------
// FALU closed form
// ---------------------------------------------------------------------------

namespace detail {

inline void falu_check_domain(double a, double beta) {
    if (a < kOrderMin || a > kOrderMax)
        throw DomainError("falu: order a = " + std::to_string(a) +
                          " outside [0, 2]");
    if (beta < kBetaMin || beta > kBetaMax)
        throw DomainError("falu: beta = " + std::to_string(beta) +
                          " outside [1, 10]");
}

} // namespace detail

/// Two-branch FALU with the corrected (a-1) factor on the upper branch.
/// g(x,b) = x sigma(b x); h(x,b) = g + sigma(x)(1 - g). The branch tie at
/// a = 1 resolves to the lower branch.
inline double falu_forward(double x, double a, double beta) {
    detail::falu_check_domain(a, beta);
    const double sb = sigmoid(beta * x);
    const double g = x * sb;
    if (a <= 1.0) return g + a * sb * (1.0 - g);
    const double h = g + sigmoid(x) * (1.0 - g);
    return h + (a - 1.0) * sb * (1.0 - 2.0 * h);
}

struct FaluPartials {
    double value;
    double d_x;
    double d_a;
    double d_beta;
};

/// Analytic partials of the active FALU branch (lower branch at a = 1).
inline FaluPartials falu_partials(double x, double a, double beta) {
    detail::falu_check_domain(a, beta);
    const double sb = sigmoid(beta * x);
    const double dsb_dx = beta * sb * (1.0 - sb);
    const double dsb_db = x * sb * (1.0 - sb);
    const double g = x * sb;
    const double dg_dx = sb + x * dsb_dx;
    const double dg_db = x * dsb_db;
    if (a <= 1.0) {
        const double value = g + a * sb * (1.0 - g);
        const double d_x = dg_dx + a * (dsb_dx * (1.0 - g) - sb * dg_dx);
        const double d_a = sb * (1.0 - g);
        const double d_beta = dg_db + a * (dsb_db * (1.0 - g) - sb * dg_db);
        return {value, d_x, d_a, d_beta};
    }
    const double s = sigmoid(x);
    const double ds_dx = s * (1.0 - s);
    const double h = g + s * (1.0 - g);
    const double dh_dx = dg_dx + ds_dx * (1.0 - g) - s * dg_dx;
    const double dh_db = dg_db * (1.0 - s);
    const double value = h + (a - 1.0) * sb * (1.0 - 2.0 * h);
    const double d_x = dh_dx + (a - 1.0) * (dsb_dx * (1.0 - 2.0 * h) - 2.0 * sb * dh_dx);
    const double d_a = sb * (1.0 - 2.0 * h);
    const double d_beta = dh_db + (a - 1.0) * (dsb_db * (1.0 - 2.0 * h) - 2.0 * sb * dh_db);
    return {value, d_x, d_a, d_beta};
}

struct FaluGrads {
    double d_x;
    double d_a;
    double d_beta;
};

inline FaluGrads falu_backward(double x, double a, double beta, double upstream) {
    const FaluPartials p = falu_partials(x, a, beta);
    return {upstream * p.d_x, upstream * p.d_a, upstream * p.d_beta};
}

// ---------------------------------------------------------------------------
// Batched forward/backward with cached planes
// ---------------------------------------------------------------------------

/// Intermediates retained from a forward pass. For a GL-fractional layer
/// the planes hold f(x - n h) for n = 0..N-1; plane count is the unit of
/// the memory-vs-N measurement. Base and FALU layers hold one plane of
/// output values.
struct ForwardCache {
    Tensor input;
    GlCoefficients coeffs;
    std::vector<std::vector<double>> planes;

    std::size_t plane_count() const { return planes.size(); }
};

namespace detail {

[[noreturn]] inline void throw_non_finite(const char* where, std::size_t index,
                                          double value) {
    throw NonFiniteError(std::string(where) + ": non-finite value " +
                         std::to_string(value) + " at element " +
                         std::to_string(index));
}

} // namespace detail

/// Element-wise activation forward. GL-fractional layers evaluate the
/// truncated operator with coefficients computed once for the whole batch
/// and cache exactly N sampled planes; base/FALU layers cache one plane.
inline std::pair<Tensor, ForwardCache> frac_act_forward(const ActivationSpec& spec,
                                                        const Tensor& input) {
    validate_spec(spec);
    const std::size_t n_elems = input.size();
    Tensor output(input.shape());
    ForwardCache cache;
    cache.input = input;

    if (spec.falu) {
        auto& plane = cache.planes.emplace_back(n_elems);
        for (std::size_t i = 0; i < n_elems; ++i) {
            const double v = falu_forward(input[i], spec.order, spec.falu_beta);
            if (!std::isfinite(v)) detail::throw_non_finite("falu forward", i, v);
            plane[i] = v;
            output[i] = v;
        }
        return {std::move(output), std::move(cache)};
    }

    if (!spec.fractional) {
        auto& plane = cache.planes.emplace_back(n_elems);
        for (std::size_t i = 0; i < n_elems; ++i) {
            const double v = base_eval(spec.base, input[i], spec.prelu_slope).value;
            if (!std::isfinite(v)) detail::throw_non_finite("activation forward", i, v);
            plane[i] = v;
            output[i] = v;
        }
        return {std::move(output), std::move(cache)};
    }

    cache.coeffs = gl_coefficients(spec.order, spec.terms, spec.step);
    cache.planes.resize(spec.terms);
    for (auto& plane : cache.planes) plane.resize(n_elems);
    const double scale = std::pow(spec.step, -spec.order);
    for (std::size_t i = 0; i < n_elems; ++i) {
        const double x = input[i];
        double sum = 0.0;
        for (int n = 0; n < spec.terms; ++n) {
            const double v = base_eval(spec.base, x - n * spec.step).value;
            cache.planes[n][i] = v;
            sum += cache.coeffs.c[n] * v;
        }
        const double y = scale * sum;
        if (!std::isfinite(y)) detail::throw_non_finite("fractional forward", i, y);
        output[i] = y;
    }
    return {std::move(output), std::move(cache)};
}

/// Gradients of one activation layer. d_order is a scalar reduction over
/// the batch (one order per layer); d_beta/d_slope are present only for
/// FALU/PReLU layers.
struct ActivationGrads {
    Tensor d_input;
    double d_order = 0.0;
    std::optional<double> d_beta;
    std::optional<double> d_slope;
};

inline ActivationGrads frac_act_backward(const ActivationSpec& spec,
                                         const ForwardCache& cache,
                                         const Tensor& upstream) {
    validate_spec(spec);
    if (!upstream.same_shape(cache.input))
        throw ShapeError("frac_act_backward: upstream shape does not match cache");
    const std::size_t n_elems = upstream.size();
    ActivationGrads grads;
    grads.d_input = Tensor(upstream.shape());

    if (spec.falu) {
        if (cache.plane_count() != 1)
            throw ShapeError("frac_act_backward: FALU cache must hold 1 plane");
        double d_a = 0.0;
        double d_b = 0.0;
        for (std::size_t i = 0; i < n_elems; ++i) {
            const FaluPartials p = falu_partials(cache.input[i], spec.order, spec.falu_beta);
            grads.d_input[i] = upstream[i] * p.d_x;
            d_a += upstream[i] * p.d_a;
            d_b += upstream[i] * p.d_beta;
        }
        grads.d_order = d_a;
        grads.d_beta = d_b;
        return grads;
    }

    if (!spec.fractional) {
        if (cache.plane_count() != 1)
            throw ShapeError("frac_act_backward: base cache must hold 1 plane");
        double d_slope = 0.0;
        for (std::size_t i = 0; i < n_elems; ++i) {
            const double x = cache.input[i];
            grads.d_input[i] =
                upstream[i] * base_eval(spec.base, x, spec.prelu_slope).deriv;
            if (spec.base == BaseKind::prelu && x <= 0.0)
                d_slope += upstream[i] * x;
        }
        if (spec.base == BaseKind::prelu) grads.d_slope = d_slope;
        return grads;
    }

    if (cache.plane_count() != static_cast<std::size_t>(spec.terms))
        throw ShapeError("frac_act_backward: cache plane count " +
                         std::to_string(cache.plane_count()) +
                         " does not match terms " + std::to_string(spec.terms));
    const GlCoefficients& k = cache.coeffs;
    const double scale = std::pow(spec.step, -spec.order);
    const double log_h = std::log(spec.step);
    double d_order = 0.0;
    for (std::size_t i = 0; i < n_elems; ++i) {
        const double x = cache.input[i];
        double sum_deriv = 0.0;
        double sum_c = 0.0;
        double sum_dc = 0.0;
        for (int n = 0; n < spec.terms; ++n) {
            sum_deriv += k.c[n] * base_eval(spec.base, x - n * spec.step).deriv;
            const double plane_v = cache.planes[n][i];
            sum_c += k.c[n] * plane_v;
            sum_dc += k.dc_da[n] * plane_v;
        }
        grads.d_input[i] = upstream[i] * scale * sum_deriv;
        d_order += upstream[i] * scale * (sum_dc - log_h * sum_c);
    }
    grads.d_order = d_order;
    return grads;
}

} // namespace fracact
