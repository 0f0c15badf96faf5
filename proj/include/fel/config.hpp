/// @file config.hpp
/// @brief Declarative run configuration: a small TOML-subset reader
///        (sections, dotted keys, numbers/booleans/strings/flat arrays),
///        a versioned schema, and the typed RunConfig consumed by the CLI.
///
/// Unknown keys are rejected: every key the schema does not consume is an
/// error, so typos never silently change a run.

#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "particles.hpp"
#include "util.hpp"

namespace fel {

struct ConfigValue {
    std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>> v;
    int line = 0;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigTree {
public:
    std::map<std::string, ConfigValue> entries;

    bool has(const std::string& key) const { return entries.count(key) != 0; }

    double number(const std::string& key) const {
        return expect<double>(key, "number");
    }
    double number_or(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    bool boolean_or(const std::string& key, bool fallback) const {
        return has(key) ? expect<bool>(key, "boolean") : fallback;
    }
    std::string str(const std::string& key) const {
        return expect<std::string>(key, "string");
    }
    std::string str_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? str(key) : fallback;
    }
    std::vector<double> numbers(const std::string& key) const {
        return expect<std::vector<double>>(key, "number array");
    }
    std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? numbers(key) : std::move(fallback);
    }

    /// Marks a key consumed without reading it (e.g. alternatives).
    void touch(const std::string& key) const { consumed_.insert(key); }

    /// Every entry must have been consumed by the schema.
    void reject_unknown() const {
        for (const auto& [k, val] : entries)
            if (!consumed_.count(k))
                throw ConfigError("unknown configuration key '" + k + "' (line " +
                                  std::to_string(val.line) + ")");
    }

    /// Canonical serialization (sorted dotted keys) for hashing.
    std::string canonical() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& [k, val] : entries) {
            os << k << '=';
            std::visit(
                [&os](const auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, double>) os << x;
                    else if constexpr (std::is_same_v<T, bool>) os << (x ? "true" : "false");
                    else if constexpr (std::is_same_v<T, std::string>) os << '"' << x << '"';
                    else {
                        os << '[';
                        for (const auto& e : x) os << e << ',';
                        os << ']';
                    }
                },
                val.v);
            os << '\n';
        }
        return os.str();
    }

    std::uint64_t hash() const {
        Fnv1a64 h;
        h.update(canonical());
        return h.digest();
    }

private:
    mutable std::set<std::string> consumed_;

    template <class T>
    const T& expect(const std::string& key, const char* what) const {
        auto it = entries.find(key);
        if (it == entries.end()) throw ConfigError("missing configuration key '" + key + "'");
        consumed_.insert(key);
        if (const T* p = std::get_if<T>(&it->second.v)) return *p;
        throw ConfigError("configuration key '" + key + "' is not a " + std::string(what) +
                          " (line " + std::to_string(it->second.line) + ")");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline ConfigValue parse_value(const std::string& raw, int line) {
    ConfigValue cv;
    cv.line = line;
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError("empty value at line " + std::to_string(line));
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ConfigError("unterminated string at line " + std::to_string(line));
        cv.v = s.substr(1, s.size() - 2);
        return cv;
    }
    if (s == "true") { cv.v = true; return cv; }
    if (s == "false") { cv.v = false; return cv; }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw ConfigError("unterminated array at line " + std::to_string(line));
        std::vector<double> nums;
        std::vector<std::string> strs;
        std::string body = s.substr(1, s.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            if (item.front() == '"') {
                if (item.back() != '"')
                    throw ConfigError("bad string array element at line " + std::to_string(line));
                strs.push_back(item.substr(1, item.size() - 2));
            } else {
                char* end = nullptr;
                const double d = std::strtod(item.c_str(), &end);
                if (end == item.c_str() || *end != '\0')
                    throw ConfigError("bad number '" + item + "' at line " + std::to_string(line));
                nums.push_back(d);
            }
        }
        if (!strs.empty() && !nums.empty())
            throw ConfigError("mixed array types at line " + std::to_string(line));
        if (!strs.empty()) cv.v = strs;
        else cv.v = nums;
        return cv;
    }
    // fractions like 7/4 are accepted for exponent-class keys
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        char* e1 = nullptr;
        char* e2 = nullptr;
        const double num = std::strtod(s.c_str(), &e1);
        const double den = std::strtod(s.c_str() + slash + 1, &e2);
        if (e1 == s.c_str() + slash && *e2 == '\0' && den != 0.0) {
            cv.v = num / den;
            return cv;
        }
    }
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("bad value '" + s + "' at line " + std::to_string(line));
    cv.v = d;
    return cv;
}

} // namespace detail

inline ConfigTree parse_config(std::istream& is) {
    ConfigTree tree;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comments outside strings
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) { line.resize(i); break; }
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("bad section header at line " + std::to_string(lineno));
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("empty section name at line " + std::to_string(lineno));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
        if (!section.empty()) key = section + "." + key;
        if (tree.entries.count(key))
            throw ConfigError("duplicate key '" + key + "' at line " + std::to_string(lineno));
        tree.entries[key] = detail::parse_value(line.substr(eq + 1), lineno);
    }
    return tree;
}

inline ConfigTree parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    return parse_config(is);
}

// ---------------------------------------------------------------------------
// Typed run configuration
// ---------------------------------------------------------------------------

struct SolverConfig {
    double eps = 0.1;
    double delta = 0.05;
    double dt = 0.0;       ///< 0 = derive from the cfl rule at t = 0
    double cfl = 0.2;
    double t_end = 1.0;
    double cadence = 0.01;
};

struct GridConfig {
    double box_radius = 0.0;  ///< 0 = default 2*support + 10*eps_max
    double spacing = 0.0;     ///< 0 = eps/8
    std::vector<double> times;  ///< diagnostic times; empty = {0, T/2, T}
};

struct StrictChecks {
    double hamiltonian_drift = 1e-4;
    double balance_error = 1e-2;
    double center_drift = 1e-6;
};

struct RunConfig {
    ConfigTree tree;
    std::uint64_t seed = 1;

    RadialFilterSpec filter;
    InitialVorticitySpec initial;
    SolverConfig solver;
    GridConfig grid;
    StrictChecks checks;

    // sweep-specific
    std::vector<double> sweep_eps;
    std::string sweep_delta_rule = "half_eps";  ///< or "fixed"
    double sweep_delta = 0.0;
    std::size_t fit_window = 4;
    double onsager_exponent = 0.5;
    std::string sweep_mode = "thm1";  ///< rate fit ("thm1") or gated ("thm2")

    // limit-study
    double limit_eps_ref = 0.0;

    bool write_trajectory = false;

    std::uint64_t hash() const { return tree.hash(); }
};

inline InitialVorticitySpec parse_initial(const ConfigTree& t) {
    InitialVorticitySpec spec;
    spec.kind = vorticity_kind_from_string(t.str("initial.kind"));
    if (t.has("initial.center")) {
        const auto c = t.numbers("initial.center");
        if (c.size() != 2) throw ConfigError("initial.center must be [x, y]");
        spec.center = {c[0], c[1]};
    }
    spec.radius = t.number_or("initial.radius", spec.radius);
    spec.amplitude = t.number_or("initial.amplitude", spec.amplitude);
    spec.cutoff = t.number_or("initial.cutoff", spec.cutoff);
    spec.beta = t.number_or("initial.beta", spec.beta);
    spec.p_class = t.number_or("initial.p", spec.p_class);
    spec.blob_count = int(t.number_or("initial.blob_count", spec.blob_count));
    spec.blob_spread = t.number_or("initial.blob_spread", spec.blob_spread);
    spec.validate();
    return spec;
}

inline RunConfig load_run_config(const ConfigTree& tree) {
    RunConfig rc;
    rc.tree = tree;
    const ConfigTree& t = rc.tree;

    const double version = t.number("schema_version");
    if (version != 1.0)
        throw ConfigError("unsupported schema_version " + std::to_string(version));

    rc.seed = std::uint64_t(t.number_or("seed", 1.0));

    std::map<std::string, double> params;
    if (t.has("filter.params.alpha")) params["alpha"] = t.number("filter.params.alpha");
    rc.filter = builtin_filter(t.str("filter.name"), params);

    rc.initial = parse_initial(t);
    if (rc.initial.kind == VorticityKind::multi_blob) rc.initial.seed = rc.seed;

    rc.solver.eps = t.number_or("solver.eps", rc.solver.eps);
    rc.solver.delta = t.number_or("solver.delta", rc.solver.delta);
    rc.solver.dt = t.number_or("solver.dt", rc.solver.dt);
    rc.solver.cfl = t.number_or("solver.cfl", rc.solver.cfl);
    rc.solver.t_end = t.number_or("solver.t_end", rc.solver.t_end);
    rc.solver.cadence = t.number_or("solver.cadence", rc.solver.cadence);
    if (!(rc.solver.eps > 0.0)) throw ConfigError("solver.eps must be > 0");
    if (!(rc.solver.t_end >= 0.0)) throw ConfigError("solver.t_end must be >= 0");

    rc.grid.box_radius = t.number_or("grid.box_radius", 0.0);
    rc.grid.spacing = t.number_or("grid.spacing", 0.0);
    if (t.has("grid.times")) rc.grid.times = t.numbers("grid.times");

    rc.checks.hamiltonian_drift = t.number_or("checks.hamiltonian_drift", rc.checks.hamiltonian_drift);
    rc.checks.balance_error = t.number_or("checks.balance_error", rc.checks.balance_error);
    rc.checks.center_drift = t.number_or("checks.center_drift", rc.checks.center_drift);

    if (t.has("sweep.eps")) {
        rc.sweep_eps = t.numbers("sweep.eps");
        if (rc.sweep_eps.size() < 4)
            throw ConfigError("sweep.eps needs at least 4 values");
        for (std::size_t i = 1; i < rc.sweep_eps.size(); ++i)
            if (!(rc.sweep_eps[i] < rc.sweep_eps[i - 1]))
                throw ConfigError("sweep.eps must be strictly decreasing");
        if (rc.initial.declared_p() <= 1.0)
            throw ConfigError("sweep initial data must declare p > 1");
    }
    rc.sweep_delta_rule = t.str_or("sweep.delta_rule", rc.sweep_delta_rule);
    if (rc.sweep_delta_rule != "half_eps" && rc.sweep_delta_rule != "fixed")
        throw ConfigError("sweep.delta_rule must be half_eps or fixed");
    rc.sweep_delta = t.number_or("sweep.delta", 0.0);
    rc.fit_window = std::size_t(t.number_or("sweep.fit_window", double(rc.fit_window)));
    rc.onsager_exponent = t.number_or("sweep.onsager_exponent", rc.onsager_exponent);
    rc.sweep_mode = t.str_or("sweep.mode", rc.sweep_mode);
    if (rc.sweep_mode != "thm1" && rc.sweep_mode != "thm2")
        throw ConfigError("sweep.mode must be thm1 or thm2");

    rc.limit_eps_ref = t.number_or("limit.eps_ref", 0.0);
    rc.write_trajectory = t.boolean_or("output.trajectory", false);
    t.touch("output.dir");

    t.reject_unknown();
    return rc;
}

inline RunConfig load_run_config_file(const std::string& path) {
    return load_run_config(parse_config_file(path));
}

} // namespace fel
