/// @file special.hpp
/// @brief Modified Bessel functions K0, K1 kept in-repo so the kernel engine
///        has no external special-function dependency.
///
/// Small arguments (x <= 2) use the ascending series, large arguments the
/// integral representation K_n(x) = int_0^inf e^{-x cosh t} cosh(nt) dt
/// rewritten as a Gaussian-type integral, evaluated adaptively. Both routes
/// reach close to machine precision; the switch point is tested for
/// continuity.

#pragma once

#include <cmath>

#include "quadrature.hpp"

namespace fel {

namespace detail {

inline constexpr double euler_gamma = 0.5772156649015328606;

// K0 and K1 ascending series for 0 < x <= 2, summed to machine convergence.
inline void bessel_k_series(double x, double& k0, double& k1) {
    const double u = 0.25 * x * x;
    const double lg = std::log(0.5 * x) + euler_gamma;

    double term = 1.0;     // u^k / (k!)^2
    double i0 = 1.0;
    double s0 = 0.0;       // sum u^k/(k!)^2 * H_k
    double i1 = 1.0;       // sum u^k / (k!(k+1)!) (x/2 factor applied later)
    double s1 = 0.0;       // sum k * H_k * u^(k-1) / (k!)^2
    double hk = 0.0;
    double term1 = 1.0;    // u^k / (k!(k+1)!)
    for (int k = 1; k < 64; ++k) {
        term *= u / (double(k) * double(k));
        hk += 1.0 / double(k);
        s0 += term * hk;
        s1 += term * double(k) * hk / u;
        term1 *= u / (double(k) * double(k + 1));
        i1 += term1;
        i0 += term;
        if (term < 1e-18 * (i0 + 1.0)) break;
    }
    i1 *= 0.5 * x;
    k0 = -lg * i0 + s0;
    // K1 = -K0' evaluated term-by-term from the series above.
    k1 = i0 / x + lg * i1 - 0.5 * x * s1;
}

// 2 e^{-x} int_0^inf e^{-x v^2} w(v) / sqrt(v^2 + 2) dv with w = 1 (K0)
// or w = 1 + v^2 (K1); derived from cosh t = 1 + v^2. After v = w/sqrt(x)
// the integrand is a fixed Gaussian profile; a fixed composite rule reaches
// machine precision at constant cost (the profile sits in inner loops).
inline double bessel_k_integral(double x, int order) {
    const double inv_x = 1.0 / x;
    auto f = [inv_x, order](double w) {
        const double w2x = w * w * inv_x;
        const double num = order == 0 ? 1.0 : 1.0 + w2x;
        return std::exp(-w * w) * num / std::sqrt(w2x + 2.0);
    };
    double total = 0.0;
    for (int p = 0; p < 8; ++p) {
        double k, g;
        gk15(f, 0.875 * p, 0.875 * (p + 1), k, g);
        total += k;
    }
    return 2.0 * std::exp(-x) / std::sqrt(x) * total;
}

} // namespace detail

inline double bessel_k0(double x) {
    if (!(x > 0.0)) return std::numeric_limits<double>::infinity();
    if (x <= 2.0) {
        double k0, k1;
        detail::bessel_k_series(x, k0, k1);
        return k0;
    }
    return detail::bessel_k_integral(x, 0);
}

inline double bessel_k1(double x) {
    if (!(x > 0.0)) return std::numeric_limits<double>::infinity();
    if (x <= 2.0) {
        double k0, k1;
        detail::bessel_k_series(x, k0, k1);
        return k1;
    }
    return detail::bessel_k_integral(x, 1);
}

} // namespace fel
