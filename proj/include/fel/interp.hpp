/// @file interp.hpp
/// @brief Cubic Hermite interpolation on a uniform grid in log rho.
///
/// The tabulated kernel functions all have analytically known derivatives
/// with respect to tau = log rho (e.g. dG/dtau = m/(2pi), dPot/dtau = I),
/// so nodes carry exact slopes and the interpolant is O(h^4) accurate with
/// derivative data consistent by construction.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fel {

struct HermiteLogGrid {
    double tau0 = 0.0;       ///< log(rho_min)
    double dtau = 0.0;
    std::size_t n = 0;

    double rho_min() const { return std::exp(tau0); }
    double rho_max() const { return std::exp(tau0 + dtau * double(n - 1)); }
    double rho_at(std::size_t i) const { return std::exp(tau0 + dtau * double(i)); }

    /// Clamped segment lookup; t in [0,1] within the segment.
    void locate(double rho, std::size_t& seg, double& t) const {
        const double u = (std::log(rho) - tau0) / dtau;
        if (u <= 0.0) { seg = 0; t = 0.0; return; }
        if (u >= double(n - 1)) { seg = n - 2; t = 1.0; return; }
        seg = static_cast<std::size_t>(u);
        t = u - double(seg);
    }
};

/// One tabulated function: values and d/dtau slopes at the shared grid nodes.
struct HermiteSeries {
    std::vector<double> value;
    std::vector<double> slope;

    double eval(const HermiteLogGrid& g, std::size_t seg, double t) const {
        const double v0 = value[seg], v1 = value[seg + 1];
        const double m0 = slope[seg] * g.dtau, m1 = slope[seg + 1] * g.dtau;
        const double t2 = t * t, t3 = t2 * t;
        return (2.0 * t3 - 3.0 * t2 + 1.0) * v0 + (t3 - 2.0 * t2 + t) * m0 +
               (-2.0 * t3 + 3.0 * t2) * v1 + (t3 - t2) * m1;
    }
};

/// 4th-order central-difference slopes for sampled data (used when no
/// analytic slope is available, e.g. the numerically convolved profile).
inline std::vector<double> fd_slopes(const std::vector<double>& v, double dtau) {
    const std::size_t n = v.size();
    if (n < 5) throw std::invalid_argument("fd_slopes: need at least 5 samples");
    std::vector<double> s(n);
    for (std::size_t i = 2; i + 2 < n; ++i)
        s[i] = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dtau);
    s[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * dtau);
    s[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * dtau);
    s[n - 2] = -(-3.0 * v[n - 1] - 10.0 * v[n - 2] + 18.0 * v[n - 3] - 6.0 * v[n - 4] + v[n - 5]) / (12.0 * dtau);
    s[n - 1] = -(-25.0 * v[n - 1] + 48.0 * v[n - 2] - 36.0 * v[n - 3] + 16.0 * v[n - 4] - 3.0 * v[n - 5]) / (12.0 * dtau);
    return s;
}

} // namespace fel
