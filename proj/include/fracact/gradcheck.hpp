#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fracact/activations.hpp"
#include "fracact/gl.hpp"
#include "fracact/io.hpp"
#include "fracact/nn.hpp"
#include "fracact/rng.hpp"

namespace fracact {

/// Error metric for gradient checks: absolute for small values, relative
/// once either side exceeds 1.
inline double relative_error(double analytic, double numeric) {
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / denom;
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double step) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

inline constexpr double kScalarGradTol = 1e-5;
inline constexpr double kModelGradTol = 1e-4;
inline constexpr double kFdStep = 1e-5;
inline constexpr double kFaluFdStep = 1e-6;

/// Outcome of one finite-difference suite: worst relative error over all
/// cases plus a human-readable description of the worst case.
struct SuiteResult {
    std::string name;
    int cases = 0;
    double worst = 0.0;
    double tolerance = 0.0;
    std::string worst_case;

    bool passed() const { return worst <= tolerance; }

    std::string summary() const {
        return name + ": cases=" + std::to_string(cases) +
               " worst_rel_err=" + format_double(worst) +
               " tol=" + format_double(tolerance) + " " +
               (passed() ? "ok" : "FAIL") +
               (worst_case.empty() ? "" : " (worst: " + worst_case + ")");
    }
};

namespace detail {

inline void suite_update(SuiteResult& suite, double err, const std::string& desc) {
    if (err > suite.worst) {
        suite.worst = err;
        suite.worst_case = desc;
    }
}

inline BaseKind pick_gl_base(Rng& rng) {
    switch (rng.below(3)) {
        case 0: return BaseKind::sigmoid;
        case 1: return BaseKind::gelu_tanh;
        default: return BaseKind::mish;
    }
}

inline std::string gl_case_desc(BaseKind base, double a, int terms, double h,
                                double x) {
    return std::string(to_string(base)) + " a=" + format_double(a) +
           " N=" + std::to_string(terms) + " h=" + format_double(h) +
           " x=" + format_double(x);
}

} // namespace detail

/// frac_grad_input against a central difference of frac_apply over x.
inline SuiteResult check_frac_grad_input(std::uint64_t seed, int cases) {
    SuiteResult suite{"frac_grad_input", cases, 0.0, kScalarGradTol, ""};
    Rng rng = Rng(seed).fork(1);
    for (int i = 0; i < cases; ++i) {
        const BaseKind base = detail::pick_gl_base(rng);
        const double a = rng.uniform(0.0, 2.0);
        const int terms = 1 + static_cast<int>(rng.below(8));
        const double h = rng.below(2) ? step_for_terms(terms)
                                      : rng.uniform(0.1, 1.5);
        const double x = rng.uniform(-4.0, 4.0);
        const ScalarFn f = make_scalar_fn(base);
        const GlCoefficients k = gl_coefficients(a, terms, h);
        const double analytic = frac_grad_input(f, k, x);
        const double numeric = central_diff(
            [&](double xx) { return frac_apply(f, k, xx); }, x, kFdStep);
        detail::suite_update(suite, relative_error(analytic, numeric),
                             detail::gl_case_desc(base, a, terms, h, x));
    }
    return suite;
}

/// frac_grad_order against a central difference over the order, with the
/// coefficients recomputed at the shifted orders.
inline SuiteResult check_frac_grad_order(std::uint64_t seed, int cases) {
    SuiteResult suite{"frac_grad_order", cases, 0.0, kScalarGradTol, ""};
    Rng rng = Rng(seed).fork(2);
    for (int i = 0; i < cases; ++i) {
        const BaseKind base = detail::pick_gl_base(rng);
        const double a = rng.uniform(0.001, 1.999);
        const int terms = 1 + static_cast<int>(rng.below(8));
        const double h = rng.below(2) ? step_for_terms(terms)
                                      : rng.uniform(0.1, 1.5);
        const double x = rng.uniform(-4.0, 4.0);
        const ScalarFn f = make_scalar_fn(base);
        const GlCoefficients k = gl_coefficients(a, terms, h);
        const double analytic = frac_grad_order(f, k, x);
        const double numeric = central_diff(
            [&](double aa) {
                return frac_apply(f, gl_coefficients(aa, terms, h), x);
            },
            a, kFdStep);
        detail::suite_update(suite, relative_error(analytic, numeric),
                             detail::gl_case_desc(base, a, terms, h, x));
    }
    return suite;
}

/// FALU partials (x, a, beta) against central differences of
/// falu_forward. Orders within 1e-3 of the a = 1 branch boundary are
/// excluded; the closed form is only piecewise differentiable there.
inline SuiteResult check_falu_partials(std::uint64_t seed, int cases) {
    SuiteResult suite{"falu_partials", cases, 0.0, kScalarGradTol, ""};
    Rng rng = Rng(seed).fork(3);
    for (int i = 0; i < cases; ++i) {
        const double x = rng.uniform(-5.0, 5.0);
        const double a = rng.below(2) ? rng.uniform(0.01, 0.999 - 1e-3)
                                      : rng.uniform(1.0 + 1e-3 + 0.01, 1.99);
        const double beta = rng.uniform(1.01, 9.99);
        const FaluPartials p = falu_partials(x, a, beta);
        const double fd_x = central_diff(
            [&](double xx) { return falu_forward(xx, a, beta); }, x, kFaluFdStep);
        const double fd_a = central_diff(
            [&](double aa) { return falu_forward(x, aa, beta); }, a, kFaluFdStep);
        const double fd_b = central_diff(
            [&](double bb) { return falu_forward(x, a, bb); }, beta, kFaluFdStep);
        const std::string desc = "x=" + format_double(x) + " a=" + format_double(a) +
                                 " beta=" + format_double(beta);
        detail::suite_update(suite, relative_error(p.d_x, fd_x), desc + " (d_x)");
        detail::suite_update(suite, relative_error(p.d_a, fd_a), desc + " (d_a)");
        detail::suite_update(suite, relative_error(p.d_beta, fd_b),
                             desc + " (d_beta)");
    }
    return suite;
}

/// A ScalarFn's declared derivative against a central difference of its
/// value — the detector the gradcheck command builds on; a deliberately
/// wrong derivative must trip it.
inline SuiteResult check_scalar_fn(const ScalarFn& f, const std::string& name,
                                   double lo, double hi, std::uint64_t seed,
                                   int cases) {
    SuiteResult suite{name, cases, 0.0, kScalarGradTol, ""};
    Rng rng = Rng(seed).fork(4);
    for (int i = 0; i < cases; ++i) {
        const double x = rng.uniform(lo, hi);
        const double analytic = f.deriv(x);
        const double numeric = central_diff(f.eval, x, kFdStep);
        detail::suite_update(suite, relative_error(analytic, numeric),
                             "x=" + format_double(x));
    }
    return suite;
}

/// Central-difference check of every registered parameter of a small MLP
/// against backward(), through the label-smoothed loss.
inline SuiteResult check_model_gradients(const ActivationSpec& act,
                                         const std::string& name,
                                         std::uint64_t seed) {
    SuiteResult suite{"model[" + name + "]", 0, 0.0, kModelGradTol, ""};
    Rng rng = Rng(seed).fork(5);
    MlpModel model = make_mlp(2, {4}, 2, act, rng);

    const std::size_t batch = 8;
    Tensor x = Tensor::matrix(batch, 2);
    for (double& v : x.data()) v = rng.uniform(-2.0, 2.0);
    std::vector<int> targets(batch);
    for (int& t : targets) t = static_cast<int>(rng.below(2));
    const double epsilon = 0.1;

    const auto loss_of = [&]() {
        ForwardResult fr = forward(model, x);
        return loss_label_smoothed_ce(fr.logits, targets, epsilon).loss;
    };

    ForwardResult fr = forward(model, x);
    LossResult lr = loss_label_smoothed_ce(fr.logits, targets, epsilon);
    ModelGrads grads = backward(model, fr, lr.d_logits);

    std::vector<ParamRef> params = collect_params(model);
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size; ++i) {
            double& v = params[p].data[i];
            const double saved = v;
            v = saved + kFdStep;
            const double up = loss_of();
            v = saved - kFdStep;
            const double down = loss_of();
            v = saved;
            const double numeric = (up - down) / (2.0 * kFdStep);
            const double analytic = grads.by_param[p][i];
            ++suite.cases;
            detail::suite_update(suite, relative_error(analytic, numeric),
                                 params[p].name + "[" + std::to_string(i) + "]");
        }
    }
    return suite;
}

/// The activation roster the model-level check walks: every base kind
/// plus fractional and FALU configurations on both branches.
inline std::vector<std::pair<std::string, ActivationSpec>> gradcheck_model_specs() {
    std::vector<std::pair<std::string, ActivationSpec>> specs;
    for (BaseKind base : {BaseKind::sigmoid, BaseKind::gelu_tanh, BaseKind::mish,
                          BaseKind::relu, BaseKind::prelu, BaseKind::silu,
                          BaseKind::softplus})
        specs.emplace_back(to_string(base), make_base(base));
    const std::tuple<const char*, BaseKind, int> frac_cases[] = {
        {"fsig N=2", BaseKind::sigmoid, 2},
        {"fsig N=5", BaseKind::sigmoid, 5},
        {"fgelu N=1", BaseKind::gelu_tanh, 1},
        {"fgelu N=3", BaseKind::gelu_tanh, 3},
        {"fmish N=2", BaseKind::mish, 2},
    };
    for (const auto& [label, base, terms] : frac_cases)
        specs.emplace_back(label, make_fractional(base, 0.6, terms));
    ActivationSpec falu_low = make_falu(0.6, 2.5);
    specs.emplace_back("falu a=0.6", falu_low);
    ActivationSpec falu_high = make_falu(1.7, 2.5);
    specs.emplace_back("falu a=1.7", falu_high);
    return specs;
}

/// Everything cmd_gradcheck runs: the scalar GL suites, FALU partials,
/// base-derivative detectors, and one model-level check per activation.
inline std::vector<SuiteResult> run_gradcheck(std::uint64_t seed, int cases) {
    std::vector<SuiteResult> results;
    results.push_back(check_frac_grad_input(seed, cases));
    results.push_back(check_frac_grad_order(seed, cases));
    results.push_back(check_falu_partials(seed, cases));
    for (BaseKind base : {BaseKind::sigmoid, BaseKind::gelu_tanh, BaseKind::mish,
                          BaseKind::silu, BaseKind::softplus})
        results.push_back(check_scalar_fn(make_scalar_fn(base),
                                          std::string("deriv[") + to_string(base) +
                                              "]",
                                          -4.0, 4.0, seed, cases));
    for (const auto& [name, spec] : gradcheck_model_specs())
        results.push_back(check_model_gradients(spec, name, seed));
    return results;
}

} // namespace fracact
