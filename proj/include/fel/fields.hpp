/// @file fields.hpp
/// @brief Uniform-grid evaluation of the filtered vorticity, velocity, the
///        mollification commutator residual, and the pointwise energy-balance
///        defect, plus discrete L^p norms and the shift modulus of
///        continuity.
///
/// Conventions: samples live at cell centers; discrete norms weight each
/// sample by the cell area. Norms reported over a box carry an analytic
/// far-field bound for the mass outside the box rather than folding it in.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <vector>

#include "filters.hpp"
#include "parallel.hpp"
#include "particles.hpp"
#include "util.hpp"

namespace fel {

struct GridSpec {
    Vec2 center{0.0, 0.0};
    double half_extent = 1.0;  ///< box is [cx - H, cx + H] x [cy - H, cy + H]
    double spacing = 0.1;

    std::size_t nodes_per_side() const {
        return std::max<std::size_t>(2, std::size_t(std::llround(2.0 * half_extent / spacing)));
    }
    std::size_t node_count() const { return nodes_per_side() * nodes_per_side(); }
    Vec2 node(std::size_t ix, std::size_t iy) const {
        const std::size_t n = nodes_per_side();
        (void)n;
        return {center.x - half_extent + (double(ix) + 0.5) * spacing,
                center.y - half_extent + (double(iy) + 0.5) * spacing};
    }
};

struct ScalarField {
    GridSpec grid;
    std::vector<double> v;
    double& at(std::size_t ix, std::size_t iy) { return v[iy * grid.nodes_per_side() + ix]; }
    double at(std::size_t ix, std::size_t iy) const { return v[iy * grid.nodes_per_side() + ix]; }
};

struct VectorField {
    GridSpec grid;
    std::vector<Vec2> v;
    Vec2& at(std::size_t ix, std::size_t iy) { return v[iy * grid.nodes_per_side() + ix]; }
    Vec2 at(std::size_t ix, std::size_t iy) const { return v[iy * grid.nodes_per_side() + ix]; }
};

/// Default evaluation box: twice the initial support radius plus ten times
/// the largest filter scale in the study.
inline GridSpec default_grid(Vec2 center, double support_radius, double eps,
                             double eps_max = 0.0) {
    GridSpec g;
    g.center = center;
    g.half_extent = 2.0 * support_radius + 10.0 * std::max(eps, eps_max);
    g.spacing = eps / 8.0;
    return g;
}

// ---------------------------------------------------------------------------
// Field evaluation
// ---------------------------------------------------------------------------

struct FieldSet {
    VectorField velocity;      ///< u_eps at the nodes
    ScalarField vorticity;     ///< omega_eps = sum h_eps(x - x_i) G_i
    VectorField commutator;    ///< h_eps*(u q) - u omega, nodewise
    ScalarField defect;        ///< R_eps = u . [ (h_eps*(u q))_perp - u_perp omega ]
    std::vector<std::size_t> flagged_nodes;  ///< nodes coinciding with a particle
                                             ///< of a singular-origin filter
};

/// Evaluates velocity, filtered vorticity, commutator residual and energy
/// defect in one pass over nodes. Per-particle velocities may be supplied
/// (required for the commutator/defect to mean anything at t > 0 without
/// recomputation); if absent they are computed here.
inline FieldSet eval_fields(const ParticleEnsemble& e, const RadialFilterSpec& filter,
                            const GridSpec& grid,
                            const std::vector<Vec2>* particle_u = nullptr) {
    FieldSet f;
    f.velocity.grid = grid;
    f.vorticity.grid = grid;
    f.commutator.grid = grid;
    f.defect.grid = grid;
    const std::size_t side = grid.nodes_per_side();
    const std::size_t m = side * side;
    f.velocity.v.assign(m, Vec2{});
    f.vorticity.v.assign(m, 0.0);
    f.commutator.v.assign(m, Vec2{});
    f.defect.v.assign(m, 0.0);

    std::vector<Vec2> ubuf;
    if (!particle_u) {
        ubuf = particle_velocities(e);
        particle_u = &ubuf;
    }
    const std::vector<Vec2>& up = *particle_u;

    const KernelTable& t = *e.table;
    const double eps = e.eps;
    const double inv_eps = 1.0 / eps;
    const double inv_eps2 = inv_eps * inv_eps;
    const std::size_t n = e.size();
    std::vector<unsigned char> flag(m, 0);

    parallel_for(m, [&](std::size_t b, std::size_t end) {
        for (std::size_t idx = b; idx < end; ++idx) {
            const Vec2 xg = grid.node(idx % side, idx / side);
            // velocity first: the commutator accumulates velocity differences
            // against the node value, which makes a constant field cancel
            // termwise (exactly) instead of after two large sums
            double ux = 0, uy = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dx = xg.x - e.x[j];
                const double dy = xg.y - e.y[j];
                const double d2 = dx * dx + dy * dy;
                if (d2 == 0.0) continue;
                const double s = mass_at(t, std::sqrt(d2) * inv_eps) * e.gamma[j] / (two_pi * d2);
                ux -= dy * s;
                uy += dx * s;
            }
            double om = 0, rx = 0, ry = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dx = xg.x - e.x[j];
                const double dy = xg.y - e.y[j];
                const double d2 = dx * dx + dy * dy;
                if (d2 == 0.0 && filter.singular_at_origin) {
                    flag[idx] = 1;
                    continue;
                }
                const double h = filter.eval_r2(d2 * inv_eps2) * inv_eps2;
                const double g = e.gamma[j];
                om += h * g;
                rx += h * (up[j].x - ux) * g;
                ry += h * (up[j].y - uy) * g;
            }
            f.velocity.v[idx] = {ux, uy};
            f.vorticity.v[idx] = om;
            f.commutator.v[idx] = {rx, ry};
            // R = u . (r_perp); the u.u_perp omega term cancels termwise in
            // the difference form
            f.defect.v[idx] = ux * (-ry) + uy * rx;
            if (flag[idx]) {  // node coincides with a particle: excluded from norms
                f.vorticity.v[idx] = 0.0;
                f.commutator.v[idx] = {0.0, 0.0};
                f.defect.v[idx] = 0.0;
            }
        }
    }, 128);

    for (std::size_t idx = 0; idx < m; ++idx)
        if (flag[idx]) f.flagged_nodes.push_back(idx);
    return f;
}

inline ScalarField eval_filtered_vorticity(const ParticleEnsemble& e,
                                           const RadialFilterSpec& filter,
                                           const GridSpec& grid) {
    return eval_fields(e, filter, grid).vorticity;
}

inline VectorField eval_velocity_grid(const ParticleEnsemble& e,
                                      const RadialFilterSpec& filter,
                                      const GridSpec& grid) {
    return eval_fields(e, filter, grid).velocity;
}

/// Commutator residual with caller-supplied particle and node velocities;
/// lets tests feed artificial fields (a constant field must give exactly 0).
inline VectorField commutator_residual(const ParticleEnsemble& e,
                                       const RadialFilterSpec& filter,
                                       const GridSpec& grid,
                                       const std::vector<Vec2>& particle_u,
                                       const VectorField& node_u) {
    VectorField r;
    r.grid = grid;
    const std::size_t side = grid.nodes_per_side();
    const std::size_t m = side * side;
    r.v.assign(m, Vec2{});
    const double inv_eps2 = 1.0 / (e.eps * e.eps);
    parallel_for(m, [&](std::size_t b, std::size_t end) {
        for (std::size_t idx = b; idx < end; ++idx) {
            const Vec2 xg = grid.node(idx % side, idx / side);
            const Vec2 u = node_u.v[idx];
            double rx = 0, ry = 0;
            for (std::size_t j = 0; j < e.size(); ++j) {
                const double dx = xg.x - e.x[j];
                const double dy = xg.y - e.y[j];
                const double h = filter.eval_r2((dx * dx + dy * dy) * inv_eps2) * inv_eps2;
                rx += h * (particle_u[j].x - u.x) * e.gamma[j];
                ry += h * (particle_u[j].y - u.y) * e.gamma[j];
            }
            r.v[idx] = {rx, ry};
        }
    }, 128);
    return r;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

inline double lp_norm(const ScalarField& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.v) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
    const double cell = f.grid.spacing * f.grid.spacing;
    double s = 0.0;
    for (double v : f.v) s += std::pow(std::abs(v), p);
    return std::pow(s * cell, 1.0 / p);
}

inline double lp_norm(const VectorField& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (const Vec2& v : f.v) m = std::max(m, v.norm());
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
    const double cell = f.grid.spacing * f.grid.spacing;
    double s = 0.0;
    for (const Vec2& v : f.v) s += std::pow(v.norm(), p);
    return std::pow(s * cell, 1.0 / p);
}

/// L^p norm of the difference of two fields on the same grid.
inline double lp_diff(const VectorField& a, const VectorField& b, double p) {
    if (a.v.size() != b.v.size()) throw std::invalid_argument("lp_diff: grids differ");
    const double cell = a.grid.spacing * a.grid.spacing;
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i)
        s += std::pow((a.v[i] - b.v[i]).norm(), p);
    return std::pow(s * cell, 1.0 / p);
}

/// Centered-difference divergence; boundary ring excluded.
inline ScalarField divergence(const VectorField& f) {
    ScalarField d;
    d.grid = f.grid;
    const std::size_t side = f.grid.nodes_per_side();
    d.v.assign(side * side, 0.0);
    const double inv2h = 1.0 / (2.0 * f.grid.spacing);
    for (std::size_t iy = 1; iy + 1 < side; ++iy)
        for (std::size_t ix = 1; ix + 1 < side; ++ix)
            d.at(ix, iy) = (f.at(ix + 1, iy).x - f.at(ix - 1, iy).x) * inv2h +
                           (f.at(ix, iy + 1).y - f.at(ix, iy - 1).y) * inv2h;
    return d;
}

/// Centered-difference gradient magnitude field of a vector field (Frobenius
/// norm of the Jacobian); boundary ring excluded.
inline ScalarField gradient_magnitude(const VectorField& f) {
    ScalarField g;
    g.grid = f.grid;
    const std::size_t side = f.grid.nodes_per_side();
    g.v.assign(side * side, 0.0);
    const double inv2h = 1.0 / (2.0 * f.grid.spacing);
    for (std::size_t iy = 1; iy + 1 < side; ++iy)
        for (std::size_t ix = 1; ix + 1 < side; ++ix) {
            const double uxx = (f.at(ix + 1, iy).x - f.at(ix - 1, iy).x) * inv2h;
            const double uxy = (f.at(ix, iy + 1).x - f.at(ix, iy - 1).x) * inv2h;
            const double uyx = (f.at(ix + 1, iy).y - f.at(ix - 1, iy).y) * inv2h;
            const double uyy = (f.at(ix, iy + 1).y - f.at(ix, iy - 1).y) * inv2h;
            g.at(ix, iy) = std::sqrt(uxx * uxx + uxy * uxy + uyx * uyx + uyy * uyy);
        }
    return g;
}

// ---------------------------------------------------------------------------
// Shift modulus of continuity
// ---------------------------------------------------------------------------

struct ModulusResult {
    double modulus = 0.0;  ///< sup over shifts of ||u(.-y) - u||_L3 / |y|^a
    struct Entry { Vec2 shift; double norm; double ratio; };
    std::vector<Entry> entries;
};

/// Discrete L^3 shift modulus on the grid. Shifts snap to whole grid offsets
/// and the norm runs over the overlap region. Shifts below 2h or above a
/// quarter box are rejected.
inline ModulusResult onsager_modulus(const VectorField& u, const std::vector<Vec2>& shifts,
                                     double a) {
    ModulusResult res;
    const std::size_t side = u.grid.nodes_per_side();
    const double h = u.grid.spacing;
    for (const Vec2& y : shifts) {
        const double mag = y.norm();
        if (mag < 2.0 * h || mag > 0.5 * u.grid.half_extent)
            throw std::invalid_argument("onsager_modulus: shift outside [2h, box/4]");
        const long kx = std::lround(y.x / h);
        const long ky = std::lround(y.y / h);
        if (kx == 0 && ky == 0)
            throw std::invalid_argument("onsager_modulus: shift below grid resolution");
        const Vec2 snapped{double(kx) * h, double(ky) * h};
        double s = 0.0;
        std::size_t cnt = 0;
        for (long iy = std::max(0l, ky); iy < long(side) + std::min(0l, ky); ++iy)
            for (long ix = std::max(0l, kx); ix < long(side) + std::min(0l, kx); ++ix) {
                const Vec2 d = u.at(std::size_t(ix - kx), std::size_t(iy - ky)) -
                               u.at(std::size_t(ix), std::size_t(iy));
                s += std::pow(d.norm(), 3.0);
                ++cnt;
            }
        (void)cnt;
        const double norm = std::cbrt(s * h * h);
        const double ratio = norm / std::pow(snapped.norm(), a);
        res.entries.push_back({snapped, norm, ratio});
        res.modulus = std::max(res.modulus, ratio);
    }
    return res;
}

/// Standard shift set: n_dir directions x n_mag logarithmic magnitudes
/// spanning [2h, box/4].
inline std::vector<Vec2> standard_shift_set(const GridSpec& g, int n_dir = 16, int n_mag = 8) {
    std::vector<Vec2> shifts;
    const double lo = 2.0 * g.spacing;
    const double hi = 0.5 * g.half_extent;
    const auto mags = log_space(lo * 1.0001, hi * 0.9999, std::size_t(n_mag));
    for (int k = 0; k < n_dir; ++k) {
        const double th = two_pi * double(k) / double(n_dir);
        for (double m : mags) shifts.push_back({m * std::cos(th), m * std::sin(th)});
    }
    return shifts;
}

/// Far-field bound for box-truncated L^1 norms of the defect: outside the
/// box the velocity decays like |total circulation| / (2 pi dist) and the
/// filtered weights carry at most the mass of h beyond the gap.
inline double defect_tail_bound(const ParticleEnsemble& e, const GridSpec& grid,
                                double support_radius) {
    const double gap = grid.half_extent - support_radius;
    if (gap <= 0.0) return std::numeric_limits<double>::infinity();
    const double gabs = e.total_abs_circulation();
    const double far_u = gabs / (two_pi * std::max(gap, 1e-12));
    const double leaked = gabs * (1.0 - mass_at(*e.table, gap / e.eps));
    double umax = 0.0;
    for (const Vec2 v : particle_velocities(e)) umax = std::max(umax, v.norm());
    return far_u * leaked * (umax + far_u) * 2.0;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline void save_field_csv(const ScalarField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_field_csv: cannot open " + path);
    os.precision(17);
    os << "x,y,value\n";
    const std::size_t side = f.grid.nodes_per_side();
    for (std::size_t iy = 0; iy < side; ++iy)
        for (std::size_t ix = 0; ix < side; ++ix) {
            const Vec2 p = f.grid.node(ix, iy);
            os << p.x << ',' << p.y << ',' << f.at(ix, iy) << '\n';
        }
}

inline void save_field_csv(const VectorField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_field_csv: cannot open " + path);
    os.precision(17);
    os << "x,y,vx,vy\n";
    const std::size_t side = f.grid.nodes_per_side();
    for (std::size_t iy = 0; iy < side; ++iy)
        for (std::size_t ix = 0; ix < side; ++ix) {
            const Vec2 p = f.grid.node(ix, iy);
            const Vec2 v = f.at(ix, iy);
            os << p.x << ',' << p.y << ',' << v.x << ',' << v.y << '\n';
        }
}

} // namespace fel
