#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fracact/errors.hpp"
#include "fracact/special.hpp"

namespace fracact {

/// A scalar base function together with its first derivative.
struct ScalarFn {
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
};

/// Weights c_n of the truncated Grunwald-Letnikov operator at a given
/// order, plus their derivatives with respect to the order. Immutable
/// after construction.
///
/// c_0 = 1, c_{n+1} = c_n (n - a)/(n + 1). The recurrence is finite for
/// every real order and annihilates past n = a when a is a non-negative
/// integer, so no Gamma evaluation happens on this path.
struct GlCoefficients {
    double order = 0.0;          // fractional order a
    int terms = 1;               // N, number of summands
    double step = 1.0;           // h, spacing of the sampled points
    std::vector<double> c;       // c_0 .. c_{N-1}
    std::vector<double> dc_da;   // d c_n / d a
};

/// Step-size rule h = 1/max(1, N-1): with the sum running n = 0..N-1 the
/// deepest sampled point is x - 1 for every N >= 2.
inline double step_for_terms(int terms) {
    if (terms < 1)
        throw DomainError("step_for_terms: terms must be >= 1");
    return 1.0 / static_cast<double>(std::max(1, terms - 1));
}

/// GL weights by the order recurrence, with d/da obtained by
/// differentiating the recurrence term by term.
inline GlCoefficients gl_coefficients(double order, int terms, double step) {
    if (terms < 1)
        throw DomainError("gl_coefficients: terms must be >= 1");
    if (!(step > 0.0))
        throw DomainError("gl_coefficients: step must be positive");
    GlCoefficients k;
    k.order = order;
    k.terms = terms;
    k.step = step;
    k.c.resize(terms);
    k.dc_da.resize(terms);
    k.c[0] = 1.0;
    k.dc_da[0] = 0.0;
    for (int n = 0; n + 1 < terms; ++n) {
        const double ratio = (n - order) / (n + 1.0);
        k.c[n + 1] = k.c[n] * ratio;
        k.dc_da[n + 1] = k.dc_da[n] * ratio - k.c[n] / (n + 1.0);
    }
    return k;
}

/// Same, with the step taken from the h = 1/max(1, N-1) rule.
inline GlCoefficients gl_coefficients(double order, int terms) {
    return gl_coefficients(order, terms, step_for_terms(terms));
}

/// GL weights via the direct Gamma-ratio form
/// c_n = (-1)^n Gamma(a+1) / (Gamma(n+1) Gamma(1-n+a)).
/// reciprocal_gamma turns the poles of Gamma(1-n+a) into exact zeros.
/// Test oracle for gl_coefficients; propagates a pole error from
/// gamma(a+1).
inline std::vector<double> gl_coefficients_gamma(double order, int terms) {
    if (terms < 1)
        throw DomainError("gl_coefficients_gamma: terms must be >= 1");
    const double g = gamma(order + 1.0);
    std::vector<double> c(terms);
    double sign = 1.0;
    for (int n = 0; n < terms; ++n) {
        c[n] = sign * g * reciprocal_gamma(n + 1.0) *
               reciprocal_gamma(1.0 - n + order);
        sign = -sign;
    }
    return c;
}

namespace detail {

inline double sample_or_throw(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v))
        throw NonFiniteError("frac_apply: base function returned " +
                             std::to_string(v) + " at x = " + std::to_string(x));
    return v;
}

} // namespace detail

/// Truncated GL application h^{-a} sum_n c_n f(x - n h).
/// a = 0 reproduces f(x) exactly; N = 1 with h = 1 reproduces f(x) for
/// every order.
inline double frac_apply(const ScalarFn& f, const GlCoefficients& k, double x) {
    double sum = 0.0;
    for (int n = 0; n < k.terms; ++n)
        sum += k.c[n] * detail::sample_or_throw(f.eval, x - n * k.step);
    return std::pow(k.step, -k.order) * sum;
}

/// d/dx of frac_apply: h^{-a} sum_n c_n f'(x - n h).
inline double frac_grad_input(const ScalarFn& f, const GlCoefficients& k, double x) {
    double sum = 0.0;
    for (int n = 0; n < k.terms; ++n)
        sum += k.c[n] * detail::sample_or_throw(f.deriv, x - n * k.step);
    return std::pow(k.step, -k.order) * sum;
}

/// d/da of frac_apply at fixed h and N:
///   -ln(h) h^{-a} sum_n c_n f(x-nh)  +  h^{-a} sum_n (dc_n/da) f(x-nh).
/// h is a function of N only, so there is no dh/da term. For N = 1 with
/// h = 1 both pieces vanish, which is why a single-term operator ignores
/// the order.
inline double frac_grad_order(const ScalarFn& f, const GlCoefficients& k, double x) {
    double sum_c = 0.0;
    double sum_dc = 0.0;
    for (int n = 0; n < k.terms; ++n) {
        const double v = detail::sample_or_throw(f.eval, x - n * k.step);
        sum_c += k.c[n] * v;
        sum_dc += k.dc_da[n] * v;
    }
    const double scale = std::pow(k.step, -k.order);
    return scale * (sum_dc - std::log(k.step) * sum_c);
}

/// Closed-form fractional derivative of the power law:
/// D^a x^k = Gamma(k+1)/Gamma(k+1-a) x^{k-a}, for k >= 0, x >= 0.
inline double frac_power(double k, double a, double x) {
    if (k < 0.0)
        throw DomainError("frac_power: exponent k must be >= 0");
    if (x < 0.0)
        throw DomainError("frac_power: x must be >= 0");
    if (detail::near_nonpositive_integer(k + 1.0 - a))
        throw PoleError("frac_power: k+1-a is a non-positive integer");
    if (x == 0.0 && k - a < 0.0)
        throw OverflowError("frac_power: 0 raised to negative exponent");
    const double result =
        gamma(k + 1.0) * reciprocal_gamma(k + 1.0 - a) * std::pow(x, k - a);
    if (!std::isfinite(result))
        throw OverflowError("frac_power: result exceeds double range");
    return result;
}

} // namespace fracact
