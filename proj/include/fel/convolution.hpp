/// @file convolution.hpp
/// @brief 2D self-convolution of radial profiles by angular-integral
///        reduction:
///
///   (h*h)_r(r) = int_0^inf s h(s) [ int_0^{2pi} h(sqrt(r^2+s^2-2rs cos t)) dt ] ds
///
/// The angular integral uses a 512-point periodic trapezoid rule
/// (spectrally accurate for smooth profiles). Profiles singular at the
/// origin hit the integrable singularity at t=0 when s ~ r; those switch to
/// adaptive quadrature split around the singular angle.

#pragma once

#include <cmath>
#include <vector>

#include "filters.hpp"
#include "quadrature.hpp"
#include "util.hpp"

namespace fel {

namespace detail {

inline const std::vector<double>& cos_table_512() {
    static const std::vector<double> table = [] {
        std::vector<double> t(512);
        for (int k = 0; k < 512; ++k) t[k] = std::cos(two_pi * (k + 0.5) / 512.0);
        return t;
    }();
    return table;
}

// squared chord distance in the cancellation-stable half-angle form
inline double chord2(double r, double s, double th) {
    const double d = r - s;
    const double sn = std::sin(0.5 * th);
    return d * d + 4.0 * r * s * sn * sn;
}

inline double angular_mean_smooth(const RadialFilterSpec& spec, double r, double s) {
    // the integrand peaks at th = 0 with angular width ~ (|r-s| + 1)/sqrt(rs);
    // the 512-point trapezoid is spectrally accurate only while that peak is
    // resolved, otherwise refine adaptively
    const double peak_w = (std::abs(r - s) + 1.0) / std::sqrt(std::max(r * s, 1.0));
    if (peak_w < 0.2) {
        auto f = [&](double th) { return spec.eval_r2(chord2(r, s, th)); };
        return integrate(f, 0.0, pi, 0.0, 1e-11).value / pi;
    }
    const auto& ct = cos_table_512();
    const double a = r * r + s * s;
    const double b = 2.0 * r * s;
    double acc = 0.0;
    for (double c : ct) acc += spec.eval_r2(std::max(a - b * c, 0.0));
    return acc / 512.0;
}

inline double angular_mean_singular(const RadialFilterSpec& spec, double r, double s) {
    auto f = [&](double th) {
        return spec.eval_r2(std::max(chord2(r, s, th), 1e-300));
    };
    // log singularity (if any) sits at th = 0 where |r - s| can vanish
    QuadResult head = integrate(f, 0.0, 0.1, 1e-13, 1e-10);
    QuadResult rest = integrate(f, 0.1, pi, 1e-13, 1e-10);
    return (head.value + rest.value) / pi;
}

} // namespace detail

/// Value of the 2D self-convolution (h*h)_r at radius r, by quadrature.
/// Accuracy is controlled relative to the local magnitude; the tabulated
/// moments weight the far tail by rho^2, so absolute control would not do.
inline double self_convolution_value(const RadialFilterSpec& spec, double r,
                                     double rel_tol = 1e-10) {
    auto integrand = [&](double s) {
        const double ang = spec.singular_at_origin
                               ? detail::angular_mean_singular(spec, r, s)
                               : detail::angular_mean_smooth(spec, r, s);
        return s * spec.profile(s) * ang;
    };
    // split at the radii where the integrand changes character; the second
    // piece starts at the diagonal peak s = r
    double total = 0.0;
    const double mid = std::max(1.0, r);
    total += integrate(integrand, 0.0, mid, 1e-280, rel_tol).value;
    total += integrate_to_inf(integrand, mid, 1e-280, rel_tol).value;
    return two_pi * total;
}

/// Radial profile of H = h*h - h as a callable. Closed forms are attached
/// to built-ins where they exist; this is the generic numerical route.
inline std::function<double(double)> self_convolve_radial(const RadialFilterSpec& spec) {
    RadialFilterSpec copy = spec;
    return [copy](double r) {
        return self_convolution_value(copy, r) - copy.profile(r);
    };
}

/// H profile preferring the closed form where available.
inline std::function<double(double)> excess_profile(const RadialFilterSpec& spec) {
    if (spec.has_selfconv_closed()) {
        RadialFilterSpec copy = spec;
        return [copy](double r) { return copy.selfconv_closed(r) - copy.profile(r); };
    }
    return self_convolve_radial(spec);
}

} // namespace fel
