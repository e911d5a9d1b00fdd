#pragma once

#include <array>
#include <cmath>

#include "corrchord/core/error.hpp"

namespace corrchord {

// Lanczos approximation (g = 7, 9 terms):
//   Gamma(z + 1) = sqrt(2 pi) t^(z + 1/2) e^(-t) A(z),  t = z + g + 1/2,
//   A(z) = c0 + sum_k c_k / (z + k).
// Differentiating ln Gamma(z + 1) gives
//   psi(z + 1) = ln t + (z + 1/2) / t - 1 + A'(z) / A(z),
// and psi(z) = psi(z + 1) - 1/z. Positive arguments only.
namespace detail {
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,  771.32342877765313, -176.61502916214059,
    12.507343278686905,   -0.13857109526572012,  9.9843695780195716e-6, 1.5056327351493116e-7};
} // namespace detail

inline double digamma(double z) {
    if (!(z > 0.0)) throw DomainError("digamma: argument must be positive");
    double a = detail::kLanczosCoef[0];
    double da = 0.0;
    for (int k = 1; k < 9; ++k) {
        const double inv = 1.0 / (z + k);
        a += detail::kLanczosCoef[k] * inv;
        da -= detail::kLanczosCoef[k] * inv * inv;
    }
    const double t = z + detail::kLanczosG + 0.5;
    return std::log(t) + (z + 0.5) / t - 1.0 + da / a - 1.0 / z;
}

/// Functor form, so estimators can be instantiated with an alternative psi.
struct Digamma {
    double operator()(double z) const { return digamma(z); }
};

} // namespace corrchord
