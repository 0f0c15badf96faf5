/// @file diagnostics.hpp
/// @brief Energy functionals of a particle ensemble as pairwise double sums:
///
///   pseudo-energy      Hps = -1/2 sum_{i != j} G_eps(d_ij) G_i G_j
///   interaction energy E   = -1/2 sum_{i,j}   Pot(d_ij/eps) G_i G_j
///   dissipation rate   D   = -1/2 sum_{i != j} (I(d_ij/eps)/d_ij)
///                              * (x_i - x_j).(u_i - u_j)/d_ij * G_i G_j
///
/// and the discrete identity dE/dt = D along the particle ODE flow.
///
/// Diagonal policy: excluded from Hps and D (pointwise zero or undefined),
/// included in E (Pot(0) is finite and the diagonal is needed for the
/// continuum double integral as the mesh refines). Both choices are
/// motion-invariant constants, so dE/dt = D holds either way.

#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "particles.hpp"
#include "util.hpp"

namespace fel {

struct EnergyDiagnostics {
    double pseudo_energy = 0.0;
    double interaction_energy = 0.0;
    double dissipation_rate = 0.0;
};

/// All three energy functionals in one pairwise pass; the particle
/// velocities are the ones already computed for the current step.
inline EnergyDiagnostics energy_diagnostics(const ParticleEnsemble& e,
                                            const std::vector<Vec2>& u) {
    const std::size_t n = e.size();
    const KernelTable& t = *e.table;
    const double eps = e.eps;
    const double log_eps_term = std::log(eps) / two_pi;

    // sum over ordered pairs i < j, chunked over i with fixed grain
    auto fn = [&](std::size_t ib, std::size_t ie, std::array<double, 3>& acc) {
        double hps = 0.0, inter = 0.0, diss = 0.0;
        for (std::size_t i = ib; i < ie; ++i) {
            const double xi = e.x[i], yi = e.y[i], gi = e.gamma[i];
            const double uxi = u[i].x, uyi = u[i].y;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = xi - e.x[j];
                const double dy = yi - e.y[j];
                const double d2 = dx * dx + dy * dy;
                const double gg = gi * e.gamma[j];
                if (d2 == 0.0) {
                    inter += gg * t.pot0;
                    continue;
                }
                const double d = std::sqrt(d2);
                const double rho = d / eps;
                std::size_t seg;
                double s;
                t.grid.locate(rho, seg, s);
                double green, potv, mom;
                if (rho <= t.grid.rho_min() || rho >= t.grid.rho_max()) {
                    green = green1_at(t, rho);
                    potv = pot_at(t, rho);
                    mom = moment_at(t, rho);
                } else {
                    green = t.green.eval(t.grid, seg, s);
                    potv = t.pot.eval(t.grid, seg, s);
                    mom = t.moment.eval(t.grid, seg, s);
                }
                hps += gg * (green + log_eps_term);
                inter += gg * potv;
                diss += gg * (mom / d2) * (dx * (uxi - u[j].x) + dy * (uyi - u[j].y));
            }
        }
        acc[0] = hps;
        acc[1] = inter;
        acc[2] = diss;
    };
    const auto sums = parallel_reduce<3>(n, fn, 64);

    double diag = 0.0;
    for (double g : e.gamma) diag += g * g;

    EnergyDiagnostics d;
    d.pseudo_energy = -sums[0];                      // -1/2 * 2 * sum_{i<j}
    d.interaction_energy = -sums[1] - 0.5 * t.pot0 * diag;
    d.dissipation_rate = -sums[2];
    return d;
}

inline double pseudo_energy(const ParticleEnsemble& e) {
    return energy_diagnostics(e, std::vector<Vec2>(e.size())).pseudo_energy;
}
inline double interaction_energy(const ParticleEnsemble& e) {
    return energy_diagnostics(e, std::vector<Vec2>(e.size())).interaction_energy;
}
inline double dissipation_rate(const ParticleEnsemble& e) {
    return energy_diagnostics(e, particle_velocities(e)).dissipation_rate;
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

struct DiagnosticsSeries {
    std::vector<double> time;
    std::vector<double> pseudo_energy;
    std::vector<double> interaction_energy;
    std::vector<double> dissipation_rate;
    std::vector<double> total_circulation;
    std::vector<double> center_x, center_y;
    std::vector<double> max_speed;

    std::size_t size() const { return time.size(); }

    void record(const ParticleEnsemble& e, const std::vector<Vec2>& u) {
        const EnergyDiagnostics d = energy_diagnostics(e, u);
        time.push_back(e.time);
        pseudo_energy.push_back(d.pseudo_energy);
        interaction_energy.push_back(d.interaction_energy);
        dissipation_rate.push_back(d.dissipation_rate);
        total_circulation.push_back(e.total_circulation());
        const Vec2 c = e.vorticity_center();
        center_x.push_back(c.x);
        center_y.push_back(c.y);
        double um = 0.0;
        for (const Vec2& v : u) um = std::max(um, v.norm());
        max_speed.push_back(um);
    }

    double sup_abs_dissipation() const {
        double s = 0.0;
        for (double v : dissipation_rate) s = std::max(s, std::abs(v));
        return s;
    }

    double relative_drift(const std::vector<double>& series) const {
        if (series.empty()) return 0.0;
        double lo = series[0], hi = series[0];
        for (double v : series) { lo = std::min(lo, v); hi = std::max(hi, v); }
        const double scale = std::max(std::abs(series[0]), 1e-300);
        return (hi - lo) / scale;
    }
};

/// Max relative error of the centered difference dE/dt against the recorded
/// dissipation rate. The floor keeps configurations with identically zero
/// rate (e.g. two vortices) well-posed; it defaults to
/// 1e-14 (sum |Gamma|)^3 / eps.
inline double check_energy_balance(const DiagnosticsSeries& s, double floor) {
    if (s.size() < 3) throw std::invalid_argument("check_energy_balance: need >= 3 samples");
    double dmax = 0.0;
    for (double v : s.dissipation_rate) dmax = std::max(dmax, std::abs(v));
    const double denom = dmax + floor;
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double dt = 0.5 * (s.time[k + 1] - s.time[k - 1]);
        const double dEdt = (s.interaction_energy[k + 1] - s.interaction_energy[k - 1]) / (2.0 * dt);
        worst = std::max(worst, std::abs(dEdt - s.dissipation_rate[k]) / denom);
    }
    return worst;
}

inline double default_balance_floor(const ParticleEnsemble& e) {
    const double g = e.total_abs_circulation();
    return 1e-14 * g * g * g / e.eps;
}

/// Keeps every k-th sample; used to compare cadences on one trajectory.
inline DiagnosticsSeries subsample(const DiagnosticsSeries& s, std::size_t stride) {
    DiagnosticsSeries out;
    for (std::size_t i = 0; i < s.size(); i += stride) {
        out.time.push_back(s.time[i]);
        out.pseudo_energy.push_back(s.pseudo_energy[i]);
        out.interaction_energy.push_back(s.interaction_energy[i]);
        out.dissipation_rate.push_back(s.dissipation_rate[i]);
        out.total_circulation.push_back(s.total_circulation[i]);
        out.center_x.push_back(s.center_x[i]);
        out.center_y.push_back(s.center_y[i]);
        out.max_speed.push_back(s.max_speed[i]);
    }
    return out;
}

/// CSV with a JSON header line ("# {...}") carrying run provenance.
inline void save_series_csv(const DiagnosticsSeries& s, const std::string& path,
                            const std::string& json_header) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_series_csv: cannot open " + path);
    os.precision(17);
    os << "# " << json_header << '\n';
    os << "t,pseudo_energy,interaction_energy,dissipation_rate,circulation,center_x,center_y,max_speed\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << s.time[i] << ',' << s.pseudo_energy[i] << ',' << s.interaction_energy[i] << ','
           << s.dissipation_rate[i] << ',' << s.total_circulation[i] << ',' << s.center_x[i]
           << ',' << s.center_y[i] << ',' << s.max_speed[i] << '\n';
}

} // namespace fel
