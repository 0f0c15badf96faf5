/// @file io.hpp
/// @brief JSON serialization of reports and the remaining file writers.
///        Reports use ordered JSON so identical runs produce identical bytes.

#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "experiments.hpp"
#include "filters.hpp"

namespace fel {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const FilterValidationReport& rep) {
    ojson j;
    j["filter"] = rep.filter;
    j["all_pass"] = rep.all_pass;
    ojson conds = ojson::array();
    for (const auto& c : rep.conditions) {
        ojson jc;
        jc["name"] = c.name;
        jc["measured"] = c.measured;
        jc["threshold"] = c.threshold;
        jc["quad_error"] = c.quad_error;
        jc["pass"] = c.pass;
        jc["inconclusive"] = c.inconclusive;
        if (!c.note.empty()) jc["note"] = c.note;
        conds.push_back(jc);
    }
    j["conditions"] = conds;
    return j;
}

inline ojson to_json(const FitResult& f) {
    ojson j;
    j["exponent"] = f.exponent;
    j["prefactor"] = f.prefactor;
    j["r2"] = f.r2;
    j["exact_zero"] = f.exact_zero;
    j["points"] = f.points;
    return j;
}

inline ojson to_json(const AppendixReport& rep) {
    ojson j;
    j["filter"] = rep.filter_name;
    j["eps"] = rep.eps_list;
    j["table_checksum"] = hex64(rep.table_checksum);
    j["all_pass"] = rep.all_pass;
    ojson checks = ojson::array();
    for (const auto& c : rep.checks) {
        ojson jc;
        jc["name"] = c.name;
        jc["measured"] = c.measured;
        jc["threshold"] = c.threshold;
        jc["pass"] = c.pass;
        checks.push_back(jc);
    }
    j["checks"] = checks;
    return j;
}

inline ojson to_json(const SweepReport& rep) {
    ojson j;
    j["filter"] = rep.filter_name;
    j["mode"] = rep.mode;
    j["p"] = rep.p.str();
    j["theory_exponent"] = rep.theory_exponent.str();
    j["theory_exponent_value"] = rep.theory_exponent.value();
    j["onsager_a"] = rep.onsager_a;
    j["fit_window"] = rep.fit_window;
    j["config_hash"] = hex64(rep.config_hash);
    j["table_checksum"] = hex64(rep.table_checksum);
    j["partial"] = rep.partial;
    ojson entries = ojson::array();
    for (const auto& e : rep.entries) {
        ojson je;
        je["eps"] = e.eps;
        je["delta"] = e.delta;
        je["dt"] = e.dt;
        je["particles"] = e.particles;
        if (e.failed) {
            je["failed"] = true;
            je["error"] = e.error;
        } else {
            je["sup_dissipation"] = e.sup_dissipation;
            je["dissipation_t0"] = e.dissipation_t0;
            je["hamiltonian_drift"] = e.hamiltonian_drift;
            je["balance_error"] = e.balance_error;
            je["grid_times"] = e.grid_times;
            je["defect_l1"] = e.defect_l1;
            je["defect_l1_sup"] = e.defect_l1_sup;
            je["defect_tail_bound"] = e.defect_tail_bound;
            je["onsager_modulus"] = e.onsager_modulus;
            je["wnorm_l73_over_eps67"] = e.wnorm_l73_over_eps67;
            je["wnorm_l3_over_eps16"] = e.wnorm_l3_over_eps16;
            je["lagrangian_p_norm"] = e.lagrangian_p_norm;
        }
        entries.push_back(je);
    }
    j["runs"] = entries;
    j["fit_dissipation"] = to_json(rep.fit_dissipation);
    j["fit_defect"] = to_json(rep.fit_defect);
    j["dissipation_spread"] = rep.dissipation_spread;
    j["modulus_spread"] = rep.modulus_spread;
    ojson v;
    for (const auto& [k, ok] : rep.verdicts) v[k] = ok;
    j["verdicts"] = v;
    j["all_pass"] = rep.all_pass();
    return j;
}

inline ojson to_json(const LimitStudyReport& rep) {
    ojson j;
    j["eps"] = rep.eps_list;
    j["eps_ref"] = rep.eps_ref;
    j["times"] = rep.times;
    j["r_exponent"] = rep.r_exponent;
    j["diffs"] = rep.diffs;
    j["inversions"] = rep.inversions;
    j["worst_inversion"] = rep.worst_inversion;
    j["monotone"] = rep.monotone;
    j["lagrangian_norm"] = rep.lagrangian_norm;
    j["config_hash"] = hex64(rep.config_hash);
    ojson v;
    for (const auto& [k, ok] : rep.verdicts) v[k] = ok;
    j["verdicts"] = v;
    return j;
}

inline void write_json_file(const ojson& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_json_file: cannot open " + path);
    os << j.dump(2) << '\n';
}

/// Trajectory frame rows: t, particle index, position, circulation.
inline void append_trajectory_csv(std::ofstream& os, const ParticleEnsemble& e) {
    for (std::size_t i = 0; i < e.size(); ++i)
        os << e.time << ',' << i << ',' << e.x[i] << ',' << e.y[i] << ',' << e.gamma[i]
           << '\n';
}

} // namespace fel
