/// @file simulate.hpp
/// @brief Simulation driver: discretize, pick dt, advance with RK4, record
///        diagnostics at a fixed cadence, snapshot states for grid
///        diagnostics. Deterministic for a fixed config and seed.

#pragma once

#include <functional>
#include <utility>

#include "config.hpp"
#include "diagnostics.hpp"
#include "particles.hpp"

namespace fel {

struct SimResult {
    ParticleEnsemble state;     ///< final state
    DiagnosticsSeries series;
    double dt = 0.0;
    double cadence = 0.0;       ///< actual recording interval (multiple of dt)
    int steps = 0;
    std::vector<std::pair<double, ParticleEnsemble>> snapshots;
};

/// dt from the CFL-like rule 0.2 delta / max |u(0)|.
inline double derive_dt(const ParticleEnsemble& e, double cfl, double fallback = 1e-2) {
    double umax = 0.0;
    for (const Vec2& u : particle_velocities(e)) umax = std::max(umax, u.norm());
    if (umax <= 0.0) return fallback;
    return cfl * e.cell_size / umax;
}

/// Advances the ensemble to t_end. Diagnostics are recorded every
/// `cadence` (rounded to a whole number of steps); the velocity evaluation
/// at a recording step doubles as the first RK4 stage. States are
/// snapshotted at the requested times (matched to the recording lattice).
inline SimResult simulate(ParticleEnsemble ensemble, const SolverConfig& solver,
                          const std::vector<double>& snapshot_times = {},
                          const std::function<void(const ParticleEnsemble&,
                                                   const std::vector<Vec2>&)>& on_sample = {}) {
    SimResult res;
    double dt = solver.dt > 0.0 ? solver.dt : derive_dt(ensemble, solver.cfl);
    const double T = solver.t_end;
    int total_steps = T > 0.0 ? int(std::ceil(T / dt - 1e-9)) : 0;
    if (total_steps > 0) dt = T / total_steps;  // land exactly on t_end
    const int sps = std::max(1, int(std::llround(solver.cadence / dt)));

    res.dt = dt;
    res.cadence = sps * dt;
    res.steps = total_steps;

    auto want_snapshot = [&](double t) {
        for (double s : snapshot_times)
            if (std::abs(t - s) <= 0.5 * res.cadence) return true;
        return false;
    };

    Rk4Workspace w;
    std::vector<Vec2> u;
    for (int step = 0; step < total_steps; ++step) {
        if (step % sps == 0) {
            induced_velocities(*ensemble.table, ensemble.eps, ensemble.x, ensemble.y,
                               ensemble.gamma, ensemble.x, ensemble.y, u);
            res.series.record(ensemble, u);
            if (want_snapshot(ensemble.time) &&
                (res.snapshots.empty() || res.snapshots.back().first != ensemble.time))
                res.snapshots.emplace_back(ensemble.time, ensemble);
            if (on_sample) on_sample(ensemble, u);
            step_rk4(ensemble, dt, w, &u);
        } else {
            step_rk4(ensemble, dt, w);
        }
    }
    induced_velocities(*ensemble.table, ensemble.eps, ensemble.x, ensemble.y, ensemble.gamma,
                       ensemble.x, ensemble.y, u);
    res.series.record(ensemble, u);
    if (want_snapshot(ensemble.time) &&
        (res.snapshots.empty() || res.snapshots.back().first != ensemble.time))
        res.snapshots.emplace_back(ensemble.time, ensemble);
    if (on_sample) on_sample(ensemble, u);

    res.state = std::move(ensemble);
    return res;
}

/// Convenience entry: build the table (shared), discretize, run.
inline SimResult simulate_config(const RunConfig& rc,
                                 std::shared_ptr<const KernelTable> table,
                                 const std::function<void(const ParticleEnsemble&,
                                                          const std::vector<Vec2>&)>& on_sample = {}) {
    auto ensemble = discretize(rc.initial, rc.solver.delta, rc.solver.eps, std::move(table));
    std::vector<double> times = rc.grid.times;
    if (times.empty())
        times = {0.0, 0.5 * rc.solver.t_end, rc.solver.t_end};
    return simulate(std::move(ensemble), rc.solver, times, on_sample);
}

} // namespace fel
