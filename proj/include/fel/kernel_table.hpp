/// @file kernel_table.hpp
/// @brief Radial kernel calculus for a filter h at scale eps:
///
///   m(rho)    enclosed mass of h, reduces the filtered Biot-Savart kernel to
///             K_eps(x) = x_perp m(|x|/eps) / (2 pi |x|^2)
///   H         = h*h - h ("excess" between twice- and once-filtered kernels)
///   I(rho)    = int_0^rho t H(t) dt, so grad of the excess potential is
///             (x/|x|) I(|x|/eps)/|x|; I -> 0 at infinity (H has zero net mass)
///   Pot(rho)  radial excess potential at eps=1:
///             Pot(rho) = log(rho) I(rho) + int_rho^inf log(s) s H(s) ds
///   G1(rho)   mollified 2D Green function at eps=1, normalized so that
///             G1(rho) - log(rho)/2pi -> 0 at infinity
///
/// Everything is tabulated once per filter on a dimensionless log-rho grid;
/// the eps-scalings are exact:
///   excess potential at (eps, r)      = Pot(r/eps)
///   its radial derivative at (eps, r) = I(r/eps) / r
///   Green function at (eps, r)        = G1(r/eps) + log(eps)/2pi
///
/// Beyond the grid the tails follow the decay bounds (|Pot| <~ 1/rho,
/// |I| <~ 1/rho) via fitted power laws; below the grid I follows the
/// power model I ~ c rho^(2-alpha).

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "convolution.hpp"
#include "filters.hpp"
#include "interp.hpp"
#include "quadrature.hpp"
#include "util.hpp"

namespace fel {

struct KernelTable {
    std::string filter_name;
    std::map<std::string, double> filter_params;
    double weight_alpha = 0.0;
    double eps = 1.0;  ///< nominal scale carried as metadata; evaluation
                       ///< functions take eps explicitly where it matters

    HermiteLogGrid grid;
    HermiteSeries mass;    ///< m(rho)
    HermiteSeries moment;  ///< I(rho)
    HermiteSeries pot;     ///< Pot(rho)
    HermiteSeries green;   ///< G1(rho)

    double pot0 = 0.0;    ///< Pot(0) = int_0^inf log(s) s H(s) ds
    double green0 = 0.0;  ///< G1(0)

    // tail models beyond rho_max: f(rho) = f(rho_max) (rho_max/rho)^k
    double mass_defect_tail_k = 8.0;  ///< for 1 - m
    double moment_tail_k = 8.0;
    double pot_tail_k = 8.0;
    // head model below rho_min: I(rho) = I(rho_min) (rho/rho_min)^k
    double moment_head_k = 2.0;

    /// I(rho_max) plus the fitted-tail estimate of int_{rho_max}^inf t H dt;
    /// vanishes (to quadrature accuracy) because H has zero net mass.
    double moment_inf_residual = 0.0;

    std::uint64_t checksum = 0;
};

struct KernelTableOptions {
    double rho_min = 1e-6;
    double rho_max = 1e4;
    std::size_t n = 4096;
    double conv_rel_tol = 1e-10;  ///< per-point tolerance of the numerical convolution
};

namespace detail {

// GK15 integral of g(tau) over one grid segment (non-adaptive; integrands
// here are already smooth spline evaluations).
template <class G>
inline double segment_integral(const G& g, double ta, double tb) {
    double k, gauss;
    gk15(g, ta, tb, k, gauss);
    return k;
}

// log-log slope of |f| over the trailing (or leading) decade of nodes.
inline double fit_power(const HermiteLogGrid& grid, const std::vector<double>& v,
                        bool at_tail, double fallback) {
    const std::size_t decade = std::max<std::size_t>(8, grid.n / 10);
    const std::size_t lo = at_tail ? grid.n - decade : 0;
    const std::size_t hi = at_tail ? grid.n : decade;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double a = std::abs(v[i]);
        if (a < 1e-280) continue;
        const double x = grid.tau0 + grid.dtau * double(i);
        const double y = std::log(a);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++cnt;
    }
    if (cnt < 4) return fallback;
    const double denom = double(cnt) * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) return fallback;
    double slope = (double(cnt) * sxy - sx * sy) / denom;
    if (!std::isfinite(slope)) return fallback;
    return slope;
}

} // namespace detail

inline std::uint64_t table_checksum(const KernelTable& t) {
    Fnv1a64 h;
    h.update(t.filter_name);
    for (const auto& [k, v] : t.filter_params) { h.update(k); h.update(v); }
    h.update(t.grid.tau0);
    h.update(t.grid.dtau);
    h.update(std::uint64_t(t.grid.n));
    for (const auto* s : {&t.mass, &t.moment, &t.pot, &t.green}) {
        h.update(s->value.data(), s->value.size() * sizeof(double));
        h.update(s->slope.data(), s->slope.size() * sizeof(double));
    }
    h.update(t.pot0);
    h.update(t.green0);
    return h.digest();
}

/// Builds the dimensionless table for a filter. Uses closed forms for the
/// enclosed mass / self-convolution when the filter carries them, otherwise
/// adaptive quadrature and the angular-reduction convolution.
inline KernelTable build_kernel_table(const RadialFilterSpec& spec,
                                      const KernelTableOptions& opt = {}) {
    KernelTable t;
    t.filter_name = spec.name;
    t.filter_params = spec.params;
    t.weight_alpha = spec.weight_alpha;
    t.grid.n = opt.n;
    t.grid.tau0 = std::log(opt.rho_min);
    t.grid.dtau = (std::log(opt.rho_max) - std::log(opt.rho_min)) / double(opt.n - 1);

    const std::size_t n = opt.n;
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = t.grid.rho_at(i);

    // --- enclosed mass -----------------------------------------------------
    t.mass.value.resize(n);
    t.mass.slope.resize(n);
    if (spec.has_mass_closed()) {
        for (std::size_t i = 0; i < n; ++i) t.mass.value[i] = spec.mass_closed(rho[i]);
    } else {
        auto f = [&spec](double s) { return s * spec.profile(s); };
        double acc = two_pi * integrate(f, 0.0, rho[0], 1e-14, 1e-12).value;
        t.mass.value[0] = acc;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            acc += two_pi * integrate(f, rho[i], rho[i + 1], 1e-14, 1e-12).value;
            t.mass.value[i + 1] = acc;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        t.mass.slope[i] = two_pi * rho[i] * rho[i] * spec.profile(rho[i]);

    // --- excess profile H = h*h - h ----------------------------------------
    std::function<double(double)> H;
    if (spec.has_selfconv_closed()) {
        H = excess_profile(spec);
    } else {
        RadialFilterSpec copy = spec;
        const double tol = opt.conv_rel_tol;
        H = [copy, tol](double r) {
            return self_convolution_value(copy, r, tol) - copy.profile(r);
        };
    }
    std::vector<double> Hval(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = H(rho[i]);
        Hval[i] = std::abs(v) < 1e-300 ? 0.0 : v;
    }
    HermiteSeries Hser;
    Hser.value = Hval;
    Hser.slope = fd_slopes(Hval, t.grid.dtau);
    const double H_tail_k = -detail::fit_power(t.grid, Hval, true, -8.0);

    auto Hs = [&](double tau) {
        std::size_t seg; double u;
        t.grid.locate(std::exp(tau), seg, u);
        return Hser.eval(t.grid, seg, u);
    };

    // --- I(rho): cumulative first moment of H ------------------------------
    t.moment.value.resize(n);
    t.moment.slope.resize(n);
    t.moment.value[0] = integrate([&H](double s) { return s * H(s); },
                                  0.0, rho[0], 1e-16, 1e-12).value;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double ta = t.grid.tau0 + t.grid.dtau * double(i);
        auto g = [&](double tau) { const double r = std::exp(tau); return r * r * Hs(tau); };
        t.moment.value[i + 1] =
            t.moment.value[i] + detail::segment_integral(g, ta, ta + t.grid.dtau);
    }
    for (std::size_t i = 0; i < n; ++i)
        t.moment.slope[i] = rho[i] * rho[i] * Hval[i];

    t.moment_tail_k = std::max(0.5, -detail::fit_power(t.grid, t.moment.value, true, -2.0));
    t.moment_head_k = std::clamp(detail::fit_power(t.grid, t.moment.value, false, 2.0), 1.01, 4.0);
    {
        const double k = std::max(2.5, H_tail_k);
        const double rm = rho[n - 1];
        const double tail_moment = Hval[n - 1] * rm * rm / (k - 2.0);
        t.moment_inf_residual = t.moment.value[n - 1] + tail_moment;
    }

    // --- Pot(rho) = log(rho) I(rho) + J(rho), J = int_rho^inf log(s) s H ---
    std::vector<double> J(n);
    {
        // tail of J from the fitted H power law (k > 2 by the w3 bound)
        const double k = std::max(2.5, H_tail_k);
        const double rm = rho[n - 1];
        const double Hm = Hval[n - 1];
        J[n - 1] = Hm * rm * rm * (std::log(rm) / (k - 2.0) + 1.0 / ((k - 2.0) * (k - 2.0)));
        for (std::size_t i = n - 1; i > 0; --i) {
            const double ta = t.grid.tau0 + t.grid.dtau * double(i - 1);
            auto g = [&](double tau) {
                const double r = std::exp(tau);
                return std::log(r) * r * r * Hs(tau);
            };
            J[i - 1] = J[i] + detail::segment_integral(g, ta, ta + t.grid.dtau);
        }
    }
    t.pot.value.resize(n);
    t.pot.slope.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.pot.value[i] = std::log(rho[i]) * t.moment.value[i] + J[i];
        t.pot.slope[i] = t.moment.value[i];
    }
    t.pot0 = J[0] + integrate([&H](double s) { return s > 0 ? std::log(s) * s * H(s) : 0.0; },
                              0.0, rho[0], 1e-16, 1e-12).value;
    t.pot_tail_k = std::max(0.5, -detail::fit_power(t.grid, t.pot.value, true, -1.0));

    // --- G1(rho) ------------------------------------------------------------
    std::vector<double> defect(n);
    for (std::size_t i = 0; i < n; ++i) defect[i] = 1.0 - t.mass.value[i];
    t.mass_defect_tail_k = std::max(0.5, -detail::fit_power(t.grid, defect, true, -8.0));

    auto ms = [&](double tau) {
        std::size_t seg; double u;
        t.grid.locate(std::exp(tau), seg, u);
        return t.mass.eval(t.grid, seg, u);
    };
    std::vector<double> T(n);
    T[n - 1] = defect[n - 1] / t.mass_defect_tail_k;  // int (1-m)/s ds under power tail
    for (std::size_t i = n - 1; i > 0; --i) {
        const double ta = t.grid.tau0 + t.grid.dtau * double(i - 1);
        auto g = [&](double tau) { return 1.0 - ms(tau); };
        T[i - 1] = T[i] + detail::segment_integral(g, ta, ta + t.grid.dtau);
    }
    t.green.value.resize(n);
    t.green.slope.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.green.value[i] = (std::log(rho[i]) + T[i]) / two_pi;
        t.green.slope[i] = t.mass.value[i] / two_pi;
    }
    t.green0 = t.green.value[0] - t.mass.value[0] / (2.0 * two_pi);

    t.checksum = table_checksum(t);
    return t;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

inline double mass_at(const KernelTable& t, double rho) {
    if (rho <= 0.0) return 0.0;
    if (rho <= t.grid.rho_min()) {
        const double s = rho / t.grid.rho_min();
        return t.mass.value.front() * s * s;
    }
    if (rho >= t.grid.rho_max()) {
        const double defect = 1.0 - t.mass.value.back();
        return 1.0 - defect * std::pow(t.grid.rho_max() / rho, t.mass_defect_tail_k);
    }
    std::size_t seg; double u;
    t.grid.locate(rho, seg, u);
    return t.mass.eval(t.grid, seg, u);
}

inline double moment_at(const KernelTable& t, double rho) {
    if (rho <= 0.0) return 0.0;
    if (rho <= t.grid.rho_min()) {
        return t.moment.value.front() *
               std::pow(rho / t.grid.rho_min(), t.moment_head_k);
    }
    if (rho >= t.grid.rho_max()) {
        return t.moment.value.back() * std::pow(t.grid.rho_max() / rho, t.moment_tail_k);
    }
    std::size_t seg; double u;
    t.grid.locate(rho, seg, u);
    return t.moment.eval(t.grid, seg, u);
}

inline double pot_at(const KernelTable& t, double rho) {
    if (rho <= 0.0) return t.pot0;
    if (rho <= t.grid.rho_min()) {
        // Pot(rho) = Pot(0) + int_0^rho I(s)/s ds with the head power model
        return t.pot0 + moment_at(t, rho) / t.moment_head_k;
    }
    if (rho >= t.grid.rho_max()) {
        return t.pot.value.back() * std::pow(t.grid.rho_max() / rho, t.pot_tail_k);
    }
    std::size_t seg; double u;
    t.grid.locate(rho, seg, u);
    return t.pot.eval(t.grid, seg, u);
}

inline double green1_at(const KernelTable& t, double rho) {
    if (rho <= 0.0) return t.green0;
    if (rho <= t.grid.rho_min()) {
        const double m0 = t.mass.value.front();
        const double s = rho / t.grid.rho_min();
        return t.green.value.front() - (m0 / (2.0 * two_pi)) * (1.0 - s * s);
    }
    if (rho >= t.grid.rho_max()) {
        const double defect = 1.0 - t.mass.value.back();
        const double Ttail = (defect / t.mass_defect_tail_k) *
                             std::pow(t.grid.rho_max() / rho, t.mass_defect_tail_k);
        return (std::log(rho) + Ttail) / two_pi;
    }
    std::size_t seg; double u;
    t.grid.locate(rho, seg, u);
    return t.green.eval(t.grid, seg, u);
}

/// Excess potential value at scale eps (dimensionless in rho = r/eps).
inline double HG_value(const KernelTable& t, double eps, double r) {
    return pot_at(t, r / eps);
}
inline double HG_value(const KernelTable& t, double r) { return HG_value(t, t.eps, r); }

/// Radial derivative of the excess potential: I(r/eps)/r, 0 at r = 0.
inline double grad_HG(const KernelTable& t, double eps, double r) {
    if (r <= 0.0) return 0.0;
    return moment_at(t, r / eps) / r;
}
inline double grad_HG(const KernelTable& t, double r) { return grad_HG(t, t.eps, r); }

/// Mollified Green function G_eps(r) = G1(r/eps) + log(eps)/2pi; finite at 0.
inline double mollified_green(const KernelTable& t, double eps, double r) {
    return green1_at(t, r / eps) + std::log(eps) / two_pi;
}
inline double mollified_green(const KernelTable& t, double r) {
    return mollified_green(t, t.eps, r);
}

/// Filtered Biot-Savart kernel K_eps(x) = x_perp m(|x|/eps) / (2 pi |x|^2);
/// K_eps(0) = 0 since m(rho)/rho^2 stays bounded at the origin.
inline Vec2 filtered_biot_savart(const KernelTable& t, double eps, Vec2 x) {
    const double d2 = x.norm2();
    if (d2 == 0.0) return {0.0, 0.0};
    const double s = mass_at(t, std::sqrt(d2) / eps) / (two_pi * d2);
    return {-x.y * s, x.x * s};
}
inline Vec2 filtered_biot_savart(const KernelTable& t, Vec2 x) {
    return filtered_biot_savart(t, t.eps, x);
}

// ---------------------------------------------------------------------------
// Weighted gradient norms  || |x|^a grad Pot_eps ||_{L^q(R^2)}
// ---------------------------------------------------------------------------

/// L^q norm of |x|^a |grad of the excess potential| over the plane, by radial
/// quadrature with analytic head/tail extrapolation. q may be infinity
/// (sup of r^a |grad|). Divergent parameter combinations are rejected with
/// the failing endpoint named.
inline double weighted_grad_norm(const KernelTable& t, double eps, double a, double q) {
    if (std::isinf(q)) {
        double sup = 0.0;
        for (double r : log_space(1e-6 * eps, 1e4 * eps, 2048))
            sup = std::max(sup, std::pow(r, a) * std::abs(grad_HG(t, eps, r)));
        return sup;
    }
    if (!(q >= 1.0)) throw std::invalid_argument("weighted_grad_norm: q >= 1 required");
    // |grad| bounded at 0 and ~ r^-2 at infinity
    if (!((a - 1.0) * q > -2.0))
        throw std::invalid_argument("weighted_grad_norm: integral diverges at r = 0");
    if (!((a - 2.0) * q < -2.0))
        throw std::invalid_argument("weighted_grad_norm: integral diverges at r = infinity");

    const double r_lo = eps * t.grid.rho_min();
    const double r_hi = eps * t.grid.rho_max();
    auto integrand = [&](double r) {
        return std::pow(r, a * q + 1.0) * std::pow(std::abs(grad_HG(t, eps, r)), q);
    };
    // head: |I| ~ c rho^hk gives integrand ~ r^{(a-1)q+1+hk*q}
    const double hk = t.moment_head_k;
    const double head_exp = (a - 1.0) * q + 1.0 + hk * q;
    const double head = integrand(r_lo) * r_lo / (head_exp + 1.0);
    // tail: |I| ~ (rho_max/rho)^tk
    const double tk = t.moment_tail_k;
    const double tail_exp = (a - 1.0) * q + 1.0 - tk * q;
    const double tail = -integrand(r_hi) * r_hi / (tail_exp + 1.0);
    double mid = 0.0;
    double lo = r_lo;
    for (double hi : {eps * 1e-2, eps, eps * 1e2, r_hi}) {
        mid += integrate(integrand, lo, hi, 1e-14, 1e-9).value;
        lo = hi;
    }
    return std::pow(two_pi * (head + mid + tail), 1.0 / q);
}

// ---------------------------------------------------------------------------
// Serialization: versioned binary with checksum, CSV for inspection.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
inline double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

} // namespace detail

inline constexpr std::uint64_t kernel_table_magic = 0x46454c4b54414231ull;  // "FELKTAB1"

inline void save_kernel_table(const KernelTable& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_kernel_table: cannot open " + path);
    detail::put_u64(os, kernel_table_magic);
    detail::put_u64(os, 1);  // format version
    detail::put_u64(os, t.filter_name.size());
    os.write(t.filter_name.data(), std::streamsize(t.filter_name.size()));
    detail::put_u64(os, t.filter_params.size());
    for (const auto& [k, v] : t.filter_params) {
        detail::put_u64(os, k.size());
        os.write(k.data(), std::streamsize(k.size()));
        detail::put_f64(os, v);
    }
    detail::put_f64(os, t.weight_alpha);
    detail::put_f64(os, t.eps);
    detail::put_f64(os, t.grid.tau0);
    detail::put_f64(os, t.grid.dtau);
    detail::put_u64(os, t.grid.n);
    auto put_series = [&](const HermiteSeries& s) {
        os.write(reinterpret_cast<const char*>(s.value.data()),
                 std::streamsize(s.value.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(s.slope.data()),
                 std::streamsize(s.slope.size() * sizeof(double)));
    };
    put_series(t.mass);
    put_series(t.moment);
    put_series(t.pot);
    put_series(t.green);
    for (double v : {t.pot0, t.green0, t.mass_defect_tail_k, t.moment_tail_k,
                     t.pot_tail_k, t.moment_head_k, t.moment_inf_residual})
        detail::put_f64(os, v);
    detail::put_u64(os, t.checksum);
    if (!os) throw std::runtime_error("save_kernel_table: write failed for " + path);
}

inline KernelTable load_kernel_table(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_kernel_table: cannot open " + path);
    if (detail::get_u64(is) != kernel_table_magic)
        throw std::runtime_error("load_kernel_table: bad magic in " + path);
    if (detail::get_u64(is) != 1)
        throw std::runtime_error("load_kernel_table: unsupported version in " + path);
    KernelTable t;
    t.filter_name.resize(detail::get_u64(is));
    is.read(t.filter_name.data(), std::streamsize(t.filter_name.size()));
    const std::uint64_t np = detail::get_u64(is);
    for (std::uint64_t i = 0; i < np; ++i) {
        std::string k(detail::get_u64(is), '\0');
        is.read(k.data(), std::streamsize(k.size()));
        t.filter_params[k] = detail::get_f64(is);
    }
    t.weight_alpha = detail::get_f64(is);
    t.eps = detail::get_f64(is);
    t.grid.tau0 = detail::get_f64(is);
    t.grid.dtau = detail::get_f64(is);
    t.grid.n = detail::get_u64(is);
    auto get_series = [&](HermiteSeries& s) {
        s.value.resize(t.grid.n);
        s.slope.resize(t.grid.n);
        is.read(reinterpret_cast<char*>(s.value.data()),
                std::streamsize(s.value.size() * sizeof(double)));
        is.read(reinterpret_cast<char*>(s.slope.data()),
                std::streamsize(s.slope.size() * sizeof(double)));
    };
    get_series(t.mass);
    get_series(t.moment);
    get_series(t.pot);
    get_series(t.green);
    t.pot0 = detail::get_f64(is);
    t.green0 = detail::get_f64(is);
    t.mass_defect_tail_k = detail::get_f64(is);
    t.moment_tail_k = detail::get_f64(is);
    t.pot_tail_k = detail::get_f64(is);
    t.moment_head_k = detail::get_f64(is);
    t.moment_inf_residual = detail::get_f64(is);
    t.checksum = detail::get_u64(is);
    if (!is) throw std::runtime_error("load_kernel_table: truncated file " + path);
    if (t.checksum != table_checksum(t))
        throw std::runtime_error("load_kernel_table: checksum mismatch in " + path);
    return t;
}

inline void export_kernel_table_csv(const KernelTable& t, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_kernel_table_csv: cannot open " + path);
    os.precision(17);
    os << "rho,mass,moment,pot,green\n";
    for (std::size_t i = 0; i < t.grid.n; ++i)
        os << t.grid.rho_at(i) << ',' << t.mass.value[i] << ',' << t.moment.value[i]
           << ',' << t.pot.value[i] << ',' << t.green.value[i] << '\n';
}

} // namespace fel
