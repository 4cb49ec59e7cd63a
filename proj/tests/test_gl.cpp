// Truncated Grunwald-Letnikov machinery: coefficient recurrence against the
// direct Gamma form and against frozen reference values, the operator
// identities (a = 0, N = 1, linearity, a = 1 backward difference), and the
// closed-form power-law derivative.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fracact/activations.hpp"
#include "fracact/gl.hpp"
#include "fracact/rng.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double rel_err(double got, double want) {
    const double denom = std::max(1.0, std::max(std::abs(got), std::abs(want)));
    return std::abs(got - want) / denom;
}

} // namespace

TEST_CASE("step_for_terms follows h = 1/max(1, N-1)", "[gl]") {
    CHECK(fracact::step_for_terms(1) == 1.0);
    CHECK(fracact::step_for_terms(2) == 1.0);
    CHECK(fracact::step_for_terms(3) == 0.5);
    CHECK(fracact::step_for_terms(5) == 0.25);
    CHECK(fracact::step_for_terms(17) == 0.0625);
    CHECK_THROWS_AS(fracact::step_for_terms(0), fracact::DomainError);
    CHECK_THROWS_AS(fracact::step_for_terms(-3), fracact::DomainError);
}

TEST_CASE("gl_coefficients matches hand-computed values", "[gl]") {
    // a = 0.5, N = 4: c_n and dc_n/da worked out from the recurrence by hand.
    const auto k = fracact::gl_coefficients(0.5, 4, 0.25);
    REQUIRE(k.c.size() == 4);
    CHECK(k.c[0] == 1.0);
    CHECK(k.c[1] == -0.5);
    CHECK(k.c[2] == -0.125);
    CHECK(k.c[3] == -0.0625);
    CHECK(k.dc_da[0] == 0.0);
    CHECK(k.dc_da[1] == -1.0);
    CHECK_THAT(k.dc_da[2], WithinAbs(0.0, 1e-16));
    CHECK_THAT(k.dc_da[3], WithinRel(1.0 / 24.0, 1e-15));

    // a = 1.3, N = 6, cross-checked against the Gamma-ratio closed form
    // evaluated in extended precision.
    const auto k2 = fracact::gl_coefficients(1.3, 6, 0.2);
    const double want2[] = {1.0, -1.3, 0.195, 0.0455, 0.0193375, 0.01044225};
    for (int n = 0; n < 6; ++n) {
        CAPTURE(n);
        CHECK_THAT(k2.c[n], WithinRel(want2[n], 1e-14));
    }
}

TEST_CASE("gl_coefficients annihilates past integer orders", "[gl]") {
    // a = 1 gives the backward-difference weights [1, -1, 0, 0, ...].
    const auto k1 = fracact::gl_coefficients(1.0, 5, 0.5);
    CHECK(k1.c[0] == 1.0);
    CHECK(k1.c[1] == -1.0);
    CHECK(k1.c[2] == 0.0);
    CHECK(k1.c[3] == 0.0);
    CHECK(k1.c[4] == 0.0);

    // a = 2 gives the second-difference weights [1, -2, 1, 0, ...].
    const auto k2 = fracact::gl_coefficients(2.0, 6, 0.5);
    CHECK(k2.c[0] == 1.0);
    CHECK(k2.c[1] == -2.0);
    CHECK(k2.c[2] == 1.0);
    CHECK(k2.c[3] == 0.0);
    CHECK(k2.c[5] == 0.0);

    // a = 0 is the identity stencil.
    const auto k0 = fracact::gl_coefficients(0.0, 4, 0.5);
    CHECK(k0.c[0] == 1.0);
    CHECK(k0.c[1] == 0.0);
    CHECK(k0.c[2] == 0.0);
}

TEST_CASE("recurrence and Gamma-ratio coefficient forms agree", "[gl]") {
    fracact::Rng rng(0x91c0ffee);
    int cases = 0;
    double worst = 0.0;
    while (cases < 200) {
        const double a = rng.uniform(0.0, 2.0);
        const int terms = 1 + static_cast<int>(rng.next_u64() % 32);
        // The Gamma form needs Gamma(a+1); skip draws inside its pole band
        // (a cannot make a+1 non-positive here, so all draws are usable).
        const auto rec = fracact::gl_coefficients(a, terms, 1.0);
        const auto dir = fracact::gl_coefficients_gamma(a, terms);
        REQUIRE(dir.size() == rec.c.size());
        for (int n = 0; n < terms; ++n)
            worst = std::max(worst, rel_err(rec.c[n], dir[n]));
        ++cases;
    }
    // Integer orders: reciprocal_gamma's exact pole zeros must reproduce the
    // annihilation of the recurrence exactly.
    for (double a : {0.0, 1.0, 2.0}) {
        const auto rec = fracact::gl_coefficients(a, 8, 1.0);
        const auto dir = fracact::gl_coefficients_gamma(a, 8);
        for (int n = 0; n < 8; ++n) {
            CAPTURE(a, n);
            worst = std::max(worst, rel_err(rec.c[n], dir[n]));
            if (n > a) CHECK(dir[n] == 0.0);
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("gl_coefficients validates its arguments", "[gl]") {
    CHECK_THROWS_AS(fracact::gl_coefficients(0.5, 0, 1.0), fracact::DomainError);
    CHECK_THROWS_AS(fracact::gl_coefficients(0.5, 3, 0.0), fracact::DomainError);
    CHECK_THROWS_AS(fracact::gl_coefficients(0.5, 3, -0.1), fracact::DomainError);
    CHECK_THROWS_AS(fracact::gl_coefficients_gamma(0.5, 0), fracact::DomainError);
}

TEST_CASE("frac_apply at order zero is the identity, bitwise", "[gl]") {
    const auto fn = fracact::make_scalar_fn(fracact::BaseKind::sigmoid);
    const auto k = fracact::gl_coefficients(0.0, 7, fracact::step_for_terms(7));
    for (double x : {-3.0, -0.730001, 0.0, 0.25, 1.9, 4.2}) {
        CAPTURE(x);
        // c = [1, 0, ...] and h^{-0} = 1, so the sum is literally f(x).
        CHECK(fracact::frac_apply(fn, k, x) == fn.eval(x));
        CHECK(fracact::frac_grad_input(fn, k, x) == fn.deriv(x));
    }
}

TEST_CASE("single-term operator with h = 1 ignores the order", "[gl]") {
    const auto fn = fracact::make_scalar_fn(fracact::BaseKind::gelu_tanh);
    for (double a : {0.0, 0.37, 1.0, 1.99}) {
        const auto k = fracact::gl_coefficients(a, 1, 1.0);
        for (double x : {-2.0, 0.1, 3.5}) {
            CAPTURE(a, x);
            CHECK(fracact::frac_apply(fn, k, x) == fn.eval(x));
            // Both pieces of the order gradient vanish identically.
            CHECK(fracact::frac_grad_order(fn, k, x) == 0.0);
        }
    }
}

TEST_CASE("frac_apply is linear in the base function", "[gl]") {
    // f = 2 sigmoid + 3 gelu applied through the operator equals
    // 2 D[sigmoid] + 3 D[gelu].
    const auto sig = fracact::make_scalar_fn(fracact::BaseKind::sigmoid);
    const auto gel = fracact::make_scalar_fn(fracact::BaseKind::gelu_tanh);
    fracact::ScalarFn combo{
        [&](double x) { return 2.0 * sig.eval(x) + 3.0 * gel.eval(x); },
        [&](double x) { return 2.0 * sig.deriv(x) + 3.0 * gel.deriv(x); },
    };
    const auto k = fracact::gl_coefficients(0.8, 5, fracact::step_for_terms(5));
    for (double x : {-1.5, 0.0, 0.9, 2.6}) {
        CAPTURE(x);
        const double lhs = fracact::frac_apply(combo, k, x);
        const double rhs = 2.0 * fracact::frac_apply(sig, k, x) +
                           3.0 * fracact::frac_apply(gel, k, x);
        CHECK_THAT(lhs, WithinRel(rhs, 1e-14));
    }
}

TEST_CASE("order one with two terms is the backward difference", "[gl]") {
    const auto fn = fracact::make_scalar_fn(fracact::BaseKind::sigmoid);
    // N = 2 rule gives h = 1; weights are [1, -1]; h^{-1} = 1.
    const auto k = fracact::gl_coefficients(1.0, 2, 1.0);
    // Frozen reference values (sigmoid evaluated in extended precision):
    //   sigma(0) - sigma(-1) and sigma(1) - sigma(0).
    CHECK_THAT(fracact::frac_apply(fn, k, 0.0),
               WithinRel(0.23105857863000487, 1e-15));
    CHECK_THAT(fracact::frac_apply(fn, k, 1.0),
               WithinRel(0.23105857863000487, 1e-15));
    // Derivative stencil: sigma'(0) - sigma'(-1).
    CHECK_THAT(fracact::frac_grad_input(fn, k, 0.0),
               WithinRel(0.05338806675851815, 1e-14));
    // Exact stencil identity for arbitrary x (pure double arithmetic).
    for (double x : {-2.3, 0.4, 1.7}) {
        CAPTURE(x);
        CHECK(fracact::frac_apply(fn, k, x) == fn.eval(x) - fn.eval(x - 1.0));
    }
}

TEST_CASE("order one converges to the true derivative as h shrinks", "[gl]") {
    // At a = 1, N = 2 the operator is (f(x) - f(x-h))/h, a first-order
    // one-sided difference: error must drop roughly linearly in h.
    for (fracact::BaseKind base :
         {fracact::BaseKind::sigmoid, fracact::BaseKind::gelu_tanh}) {
        const auto fn = fracact::make_scalar_fn(base);
        const double x = 0.7;
        double prev = 1e300;
        for (double h : {0.5, 0.25, 0.125, 0.0625}) {
            const auto k = fracact::gl_coefficients(1.0, 2, h);
            const double err = std::abs(fracact::frac_apply(fn, k, x) - fn.deriv(x));
            CAPTURE(h, err);
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev < 0.02);
    }
}

TEST_CASE("frac_grad_order matches the -ln(h) decomposition", "[gl]") {
    const auto fn = fracact::make_scalar_fn(fracact::BaseKind::mish);
    const auto k = fracact::gl_coefficients(0.6, 4, 0.25);
    const double x = 1.2;
    double sum_dc = 0.0;
    for (int n = 0; n < k.terms; ++n)
        sum_dc += k.dc_da[n] * fn.eval(x - n * k.step);
    const double expected = -std::log(k.step) * fracact::frac_apply(fn, k, x) +
                            std::pow(k.step, -k.order) * sum_dc;
    CHECK_THAT(fracact::frac_grad_order(fn, k, x), WithinRel(expected, 1e-13));
}

TEST_CASE("frac_apply rejects non-finite base samples", "[gl]") {
    fracact::ScalarFn bad{
        [](double x) { return x < 0.0 ? std::nan("") : x; },
        [](double) { return 1.0; },
    };
    const auto k = fracact::gl_coefficients(0.5, 3, fracact::step_for_terms(3));
    // x = 0.25 samples 0.25, -0.25, -0.75: the NaN draws must throw.
    CHECK_THROWS_AS(fracact::frac_apply(bad, k, 0.25), fracact::NonFiniteError);
    // All samples non-negative: fine.
    CHECK(std::isfinite(fracact::frac_apply(bad, k, 2.0)));
}

TEST_CASE("frac_power matches reference values", "[gl]") {
    // D^{1/2} x at x: 2 sqrt(x/pi).
    CHECK_THAT(fracact::frac_power(1.0, 0.5, 1.0),
               WithinRel(1.1283791670955126, 1e-13));
    CHECK_THAT(fracact::frac_power(1.0, 0.5, 4.0),
               WithinRel(2.256758334191025, 1e-13));
    // D^{1.3} x^2 at x = 2.
    CHECK_THAT(fracact::frac_power(2.0, 1.3, 2.0),
               WithinRel(3.5756890697609407, 1e-13));
    // Half derivative of a constant is nonzero: 1/sqrt(pi x).
    CHECK_THAT(fracact::frac_power(0.0, 0.5, 1.0),
               WithinRel(0.5641895835477563, 1e-13));
    CHECK_THAT(fracact::frac_power(0.0, 0.5, 4.0),
               WithinRel(0.28209479177387814, 1e-13));
    // a = 0 is the identity; integer a matches classical derivatives.
    CHECK_THAT(fracact::frac_power(2.0, 0.0, 3.0), WithinRel(9.0, 1e-14));
    CHECK_THAT(fracact::frac_power(2.0, 1.0, 3.0), WithinRel(6.0, 1e-14));
    CHECK_THAT(fracact::frac_power(2.0, 2.0, 3.0), WithinRel(2.0, 1e-14));
}

TEST_CASE("frac_power rejects invalid arguments", "[gl]") {
    CHECK_THROWS_AS(fracact::frac_power(-1.0, 0.5, 1.0), fracact::DomainError);
    CHECK_THROWS_AS(fracact::frac_power(1.0, 0.5, -1.0), fracact::DomainError);
    // k+1-a a non-positive integer: Gamma pole in the denominator position
    // makes the closed form 0/0-ambiguous at x-powers; the guard throws.
    CHECK_THROWS_AS(fracact::frac_power(0.0, 1.0, 2.0), fracact::PoleError);
    CHECK_THROWS_AS(fracact::frac_power(1.0, 2.0, 2.0), fracact::PoleError);
    // 0 raised to a negative power.
    CHECK_THROWS_AS(fracact::frac_power(0.0, 0.5, 0.0), fracact::OverflowError);
}

TEST_CASE("truncated operator converges to the closed form on x^2", "[gl]") {
    // The closed form is the terminal-0 derivative, so the grid must span
    // [0, x]: take h = x/(N-1) so the deepest of the N samples is exactly 0.
    // The classical GL discretization then converges at rate O(h).
    fracact::ScalarFn square{
        [](double x) { return x * x; },
        [](double x) { return 2.0 * x; },
    };
    const double a = 0.5;
    const double x = 3.0;
    const double exact = fracact::frac_power(2.0, a, x);
    double prev = 1e300;
    for (int terms : {8, 32, 128, 512}) {
        const double h = x / static_cast<double>(terms - 1);
        const auto k = fracact::gl_coefficients(a, terms, h);
        const double err = std::abs(fracact::frac_apply(square, k, x) - exact);
        CAPTURE(terms, err, exact);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < std::abs(exact) * 0.01);
}
