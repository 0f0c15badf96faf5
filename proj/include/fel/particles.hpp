/// @file particles.hpp
/// @brief Particle discretization of initial vorticity and the filtered
///        point-vortex dynamics: circulation-carrying particles advected by
///        the filtered Biot-Savart velocity they induce.
///
/// Circulations are cell integrals of the initial vorticity and never change
/// during advection; the ensemble represents the vorticity measure as the
/// pushforward of its initial discretization under the flow map.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernel_table.hpp"
#include "parallel.hpp"
#include "util.hpp"

namespace fel {

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

enum class VorticityKind { gaussian_patch, vortex_patch, power_law, multi_blob };

inline VorticityKind vorticity_kind_from_string(const std::string& s) {
    if (s == "gaussian_patch") return VorticityKind::gaussian_patch;
    if (s == "vortex_patch") return VorticityKind::vortex_patch;
    if (s == "power_law") return VorticityKind::power_law;
    if (s == "multi_blob") return VorticityKind::multi_blob;
    throw std::invalid_argument("unknown initial vorticity kind '" + s + "'");
}

struct Blob {
    Vec2 center;
    double radius = 1.0;
    double amplitude = 1.0;
};

struct InitialVorticitySpec {
    VorticityKind kind = VorticityKind::gaussian_patch;
    Vec2 center{0.0, 0.0};
    double radius = 1.0;     ///< profile scale (gaussian_patch) or patch radius
    double amplitude = 1.0;
    double cutoff = 0.0;     ///< support radius; 0 picks the per-kind default
    double beta = 1.0;       ///< power_law exponent, q0 ~ |x|^-beta
    double p_class = 0.0;    ///< declared integrability exponent (0 = per-kind default)
    // multi_blob
    int blob_count = 8;
    std::uint64_t seed = 1;
    double blob_spread = 1.0;

    double support_radius() const {
        switch (kind) {
            case VorticityKind::gaussian_patch: return cutoff > 0 ? cutoff : 2.5 * radius;
            case VorticityKind::vortex_patch: return radius;
            case VorticityKind::power_law: return cutoff > 0 ? cutoff : 1.0;
            case VorticityKind::multi_blob: return blob_spread + 2.5 * radius;
        }
        return 1.0;
    }

    /// Largest certified integrability exponent: power_law needs beta*p < 2,
    /// every other kind is bounded.
    double declared_p() const {
        if (p_class > 0) return p_class;
        return kind == VorticityKind::power_law ? 0.95 * (2.0 / beta)
                                                : std::numeric_limits<double>::infinity();
    }

    void validate() const {
        if (kind == VorticityKind::power_law) {
            if (!(beta > 0.0 && beta < 2.0))
                throw std::invalid_argument("power_law: beta in (0,2) required");
            if (p_class > 0 && !(beta * p_class < 2.0))
                throw std::invalid_argument(
                    "power_law: declared p violates beta*p < 2 (q0 not in L^p)");
        }
        if (p_class > 0 && !(p_class > 1.0))
            throw std::invalid_argument("initial data: p must be > 1");
    }
};

namespace detail {

// splitmix64; bit-identical across platforms unlike <random> distributions
struct SplitMix64 {
    std::uint64_t s;
    explicit SplitMix64(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

} // namespace detail

inline std::vector<Blob> seeded_blobs(const InitialVorticitySpec& spec) {
    detail::SplitMix64 rng(spec.seed);
    std::vector<Blob> blobs(std::size_t(spec.blob_count));
    for (auto& b : blobs) {
        const double ang = rng.uniform(0.0, two_pi);
        const double rad = spec.blob_spread * std::sqrt(rng.uniform());
        b.center = {spec.center.x + rad * std::cos(ang), spec.center.y + rad * std::sin(ang)};
        b.radius = spec.radius * rng.uniform(0.6, 1.4);
        b.amplitude = spec.amplitude * rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    return blobs;
}

/// Pointwise initial vorticity q0(x). The power-law singularity at the center
/// is handled separately by the discretizer.
inline double initial_vorticity(const InitialVorticitySpec& spec, Vec2 x,
                                const std::vector<Blob>& blobs = {}) {
    const Vec2 d = x - spec.center;
    const double r = d.norm();
    switch (spec.kind) {
        case VorticityKind::gaussian_patch:
            return r <= spec.support_radius()
                       ? spec.amplitude * std::exp(-(r * r) / (spec.radius * spec.radius))
                       : 0.0;
        case VorticityKind::vortex_patch:
            return r <= spec.radius ? spec.amplitude : 0.0;
        case VorticityKind::power_law:
            if (r > spec.support_radius()) return 0.0;
            return r > 0.0 ? spec.amplitude * std::pow(r, -spec.beta)
                           : std::numeric_limits<double>::infinity();
        case VorticityKind::multi_blob: {
            double q = 0.0;
            for (const auto& b : blobs) {
                const double rr = (x - b.center).norm2() / (b.radius * b.radius);
                if (rr < 40.0) q += b.amplitude * std::exp(-rr);
            }
            return q;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

struct ParticleEnsemble {
    std::vector<double> x, y;
    std::vector<double> gamma;      ///< circulations; constant under advection
    double eps = 0.1;
    double cell_size = 0.0;         ///< initial mesh size, the Lagrangian cell measure
    double time = 0.0;
    std::shared_ptr<const KernelTable> table;

    std::size_t size() const { return x.size(); }

    double total_circulation() const {
        double s = 0.0;
        for (double g : gamma) s += g;
        return s;
    }
    double total_abs_circulation() const {
        double s = 0.0;
        for (double g : gamma) s += std::abs(g);
        return s;
    }
    Vec2 vorticity_center() const {
        Vec2 c{0, 0};
        for (std::size_t i = 0; i < size(); ++i) c += Vec2{x[i], y[i]} * gamma[i];
        return c;
    }

    /// Transported-weight L^p surrogate: (sum |Gamma_i|^p d^{2(p-1)})^{1/p}.
    /// Exactly conserved because the weights and cell measure never change.
    double lagrangian_lp_norm(double p) const {
        if (cell_size <= 0) throw std::logic_error("lagrangian_lp_norm: no mesh cell size");
        if (std::isinf(p)) {
            double m = 0.0;
            for (double g : gamma) m = std::max(m, std::abs(g));
            return m / (cell_size * cell_size);
        }
        double s = 0.0;
        for (double g : gamma) s += std::pow(std::abs(g), p);
        return std::pow(s * std::pow(cell_size, 2.0 * (p - 1.0)), 1.0 / p);
    }

    void check_finite(const char* where) const {
        for (std::size_t i = 0; i < size(); ++i)
            if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
                throw std::runtime_error(std::string(where) + ": non-finite particle position at index " +
                                         std::to_string(i));
    }
};

/// Midpoint-rule discretization on a uniform mesh aligned so the data center
/// is a cell center. The power-law cell containing the singular center gets
/// the radial integral over the equal-area disk instead of the (infinite)
/// midpoint sample.
inline ParticleEnsemble discretize(const InitialVorticitySpec& spec, double delta,
                                   double eps, std::shared_ptr<const KernelTable> table) {
    spec.validate();
    const double R = spec.support_radius();
    if (!(delta > 0.0)) throw std::invalid_argument("discretize: delta > 0 required");
    if (delta > R) throw std::invalid_argument("discretize: mesh size exceeds support radius");

    const auto blobs = spec.kind == VorticityKind::multi_blob ? seeded_blobs(spec)
                                                              : std::vector<Blob>{};
    double Rbound = R;
    if (spec.kind == VorticityKind::multi_blob) {
        for (const auto& b : blobs)
            Rbound = std::max(Rbound, (b.center - spec.center).norm() + 2.5 * b.radius);
    }

    ParticleEnsemble e;
    e.eps = eps;
    e.cell_size = delta;
    e.table = std::move(table);
    const int half = int(std::ceil(Rbound / delta)) + 1;
    for (int j = -half; j <= half; ++j) {
        for (int i = -half; i <= half; ++i) {
            const Vec2 pos{spec.center.x + i * delta, spec.center.y + j * delta};
            double g;
            if (spec.kind == VorticityKind::power_law && i == 0 && j == 0) {
                const double req = delta / std::sqrt(pi);  // equal-area disk
                g = spec.amplitude * two_pi * std::pow(req, 2.0 - spec.beta) / (2.0 - spec.beta);
            } else {
                g = initial_vorticity(spec, pos, blobs) * delta * delta;
            }
            if (g != 0.0) {
                e.x.push_back(pos.x);
                e.y.push_back(pos.y);
                e.gamma.push_back(g);
            }
        }
    }
    if (e.size() == 0) throw std::runtime_error("discretize: no particles generated");
    return e;
}

// ---------------------------------------------------------------------------
// Velocity evaluation: direct summation, cache-blocked over sources, parallel
// over targets. Each target accumulates sources in index order, so the result
// is independent of the thread count.
// ---------------------------------------------------------------------------

/// Velocities induced by sources (sx, sy, gamma) at targets (tx, ty). The
/// same arrays may be passed for both roles; the d2 == 0 guard then covers
/// the self term (K(0) = 0).
inline void induced_velocities(const KernelTable& t, double eps,
                               const std::vector<double>& sx,
                               const std::vector<double>& sy,
                               const std::vector<double>& gamma,
                               const std::vector<double>& tx,
                               const std::vector<double>& ty,
                               std::vector<Vec2>& out) {
    const std::size_t n = sx.size();
    const std::size_t m = tx.size();
    out.resize(m);
    const double inv_eps = 1.0 / eps;
    constexpr std::size_t tile = 512;

    parallel_for(m, [&](std::size_t tb, std::size_t te) {
        for (std::size_t i = tb; i < te; ++i) {
            double ux = 0.0, uy = 0.0;
            const double xi = tx[i], yi = ty[i];
            for (std::size_t jb = 0; jb < n; jb += tile) {
                const std::size_t jend = std::min(n, jb + tile);
                for (std::size_t j = jb; j < jend; ++j) {
                    const double dx = xi - sx[j];
                    const double dy = yi - sy[j];
                    const double d2 = dx * dx + dy * dy;
                    if (d2 == 0.0) continue;
                    const double s =
                        mass_at(t, std::sqrt(d2) * inv_eps) * gamma[j] / (two_pi * d2);
                    ux -= dy * s;
                    uy += dx * s;
                }
            }
            out[i] = {ux, uy};
        }
    }, 64);
}

/// Velocities induced at the particles themselves.
inline std::vector<Vec2> particle_velocities(const ParticleEnsemble& e) {
    std::vector<Vec2> u;
    induced_velocities(*e.table, e.eps, e.x, e.y, e.gamma, e.x, e.y, u);
    return u;
}

/// Velocity at one point.
inline Vec2 velocity_at(const ParticleEnsemble& e, Vec2 pos) {
    const KernelTable& t = *e.table;
    double ux = 0.0, uy = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double dx = pos.x - e.x[j];
        const double dy = pos.y - e.y[j];
        const double d2 = dx * dx + dy * dy;
        if (d2 == 0.0) continue;
        const double s = mass_at(t, std::sqrt(d2) / e.eps) * e.gamma[j] / (two_pi * d2);
        ux -= dy * s;
        uy += dx * s;
    }
    return {ux, uy};
}

// ---------------------------------------------------------------------------
// Time stepping: classical RK4 on the coupled particle ODE system.
// ---------------------------------------------------------------------------

struct Rk4Workspace {
    std::vector<double> px, py;
    std::vector<Vec2> k1, k2, k3, k4;
};

/// One RK4 step; k1 may be supplied when the caller already evaluated the
/// velocity at the current state (diagnostics share that evaluation).
inline void step_rk4(ParticleEnsemble& e, double dt, Rk4Workspace& w,
                     const std::vector<Vec2>* k1_precomputed = nullptr) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt > 0 required");
    const std::size_t n = e.size();
    w.px.resize(n);
    w.py.resize(n);

    const KernelTable& t = *e.table;
    if (k1_precomputed) {
        w.k1 = *k1_precomputed;
    } else {
        induced_velocities(t, e.eps, e.x, e.y, e.gamma, e.x, e.y, w.k1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        w.px[i] = e.x[i] + 0.5 * dt * w.k1[i].x;
        w.py[i] = e.y[i] + 0.5 * dt * w.k1[i].y;
    }
    induced_velocities(t, e.eps, w.px, w.py, e.gamma, w.px, w.py, w.k2);
    for (std::size_t i = 0; i < n; ++i) {
        w.px[i] = e.x[i] + 0.5 * dt * w.k2[i].x;
        w.py[i] = e.y[i] + 0.5 * dt * w.k2[i].y;
    }
    induced_velocities(t, e.eps, w.px, w.py, e.gamma, w.px, w.py, w.k3);
    for (std::size_t i = 0; i < n; ++i) {
        w.px[i] = e.x[i] + dt * w.k3[i].x;
        w.py[i] = e.y[i] + dt * w.k3[i].y;
    }
    induced_velocities(t, e.eps, w.px, w.py, e.gamma, w.px, w.py, w.k4);
    const double c = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        e.x[i] += c * (w.k1[i].x + 2.0 * w.k2[i].x + 2.0 * w.k3[i].x + w.k4[i].x);
        e.y[i] += c * (w.k1[i].y + 2.0 * w.k2[i].y + 2.0 * w.k3[i].y + w.k4[i].y);
    }
    e.time += dt;
    e.check_finite("step_rk4");
}

inline void step_rk4(ParticleEnsemble& e, double dt) {
    Rk4Workspace w;
    step_rk4(e, dt, w);
}

} // namespace fel
