#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "fracact/errors.hpp"

namespace fracact {

/// Euler-Mascheroni constant to 16 significant digits.
inline constexpr double kEulerMascheroni = 0.5772156649015329;

/// Absolute distance to the nearest non-positive integer below which an
/// argument is treated as sitting on a Gamma pole.
inline constexpr double kPoleTol = 1e-12;

namespace detail {

inline bool near_nonpositive_integer(double z) {
    if (z > kPoleTol) return false;
    return std::abs(z - std::round(z)) <= kPoleTol;
}

/// sin(pi*z) via argument reduction so that integer z maps to exactly 0 and
/// relative accuracy holds near every integer.
inline double sin_pi(double z) {
    const double n = std::round(z);
    const double r = z - n;                  // |r| <= 0.5, exact
    const double s = std::sin(M_PI * r);
    const bool odd = std::fmod(std::abs(n), 2.0) == 1.0;
    return odd ? -s : s;
}

// Lanczos approximation, g = 7, 9 coefficients.
inline constexpr double kLanczosG = 7.0;
inline constexpr double kLanczosCoeff[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

/// Partial-fraction sum of the Lanczos series at z-1 (call with z >= 0.5).
inline double lanczos_sum(double z) {
    const double zz = z - 1.0;
    double acc = kLanczosCoeff[0];
    for (int i = 1; i < 9; ++i) acc += kLanczosCoeff[i] / (zz + i);
    return acc;
}

/// Gamma(z) for z >= 0.5. Evaluates the power/exponential factor in log
/// space so arguments near the overflow edge do not blow up in
/// intermediates; overflow comes out as +inf.
inline double gamma_positive(double z) {
    const double zz = z - 1.0;
    const double t = zz + kLanczosG + 0.5;
    const double lanczos = lanczos_sum(z);
    const double log_rest = (zz + 0.5) * std::log(t) - t;
    return std::sqrt(2.0 * M_PI) * lanczos * std::exp(log_rest);
}

inline double log_gamma_positive(double z) {
    if (z < 0.5) {
        // ln Gamma(z) = ln Gamma(z+1) - ln z
        return log_gamma_positive(z + 1.0) - std::log(z);
    }
    const double zz = z - 1.0;
    const double t = zz + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * M_PI) + std::log(lanczos_sum(z)) +
           (zz + 0.5) * std::log(t) - t;
}

} // namespace detail

/// ln Gamma(z) for z > 0.
inline double log_gamma(double z) {
    if (!(z > 0.0))
        throw DomainError("log_gamma: argument must be positive, got " +
                          std::to_string(z));
    return detail::log_gamma_positive(z);
}

/// Gamma(z) on the reals. Reflection handles z < 0.5; non-positive
/// integers (within kPoleTol) raise PoleError and results beyond the
/// double range raise OverflowError.
inline double gamma(double z) {
    if (detail::near_nonpositive_integer(z))
        throw PoleError("gamma: pole at non-positive integer z = " +
                        std::to_string(z));
    double result;
    if (z < 0.5) {
        result = M_PI / (detail::sin_pi(z) * detail::gamma_positive(1.0 - z));
    } else {
        result = detail::gamma_positive(z);
    }
    if (!std::isfinite(result))
        throw OverflowError("gamma: |Gamma(z)| exceeds double range at z = " +
                            std::to_string(z));
    return result;
}

/// 1/Gamma(z), entire in z: exactly 0 within kPoleTol of every
/// non-positive integer, never throws. Arguments so negative that the
/// true magnitude exceeds the double range return +-inf.
inline double reciprocal_gamma(double z) {
    if (detail::near_nonpositive_integer(z)) return 0.0;
    if (z >= 0.5) {
        const double g = detail::gamma_positive(z);
        if (std::isinf(g)) return 0.0; // Gamma overflowed, reciprocal underflows
        return 1.0 / g;
    }
    // 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi, assembled in log space.
    const double s = detail::sin_pi(z);
    const double log_mag = std::log(std::abs(s)) +
                           detail::log_gamma_positive(1.0 - z) -
                           std::log(M_PI);
    return std::copysign(std::exp(log_mag), s);
}

/// Truncated Weierstrass product for Gamma(z), z > 0. Slow; kept as an
/// independent reference for gamma(). Converges like exp(z^2 / (2*terms)).
inline double gamma_weierstrass(double z, long terms) {
    if (!(z > 0.0))
        throw DomainError("gamma_weierstrass: argument must be positive, got " +
                          std::to_string(z));
    if (terms < 1)
        throw DomainError("gamma_weierstrass: terms must be >= 1");
    double acc = -kEulerMascheroni * z - std::log(z);
    for (long k = 1; k <= terms; ++k) {
        const double q = z / static_cast<double>(k);
        acc += q - std::log1p(q);
    }
    return std::exp(acc);
}

} // namespace fracact
