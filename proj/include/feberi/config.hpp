#pragma once
// Scenario configuration: INI text with [physics], [numerics] and [sweep] sections.
// Unknown keys are rejected with a line number.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "feberi/analytic.hpp"
#include "feberi/born.hpp"
#include "feberi/core.hpp"
#include "feberi/coulomb.hpp"
#include "feberi/solver_momentum.hpp"

namespace feberi {

enum class ScenarioKind {
    fig3_ground,
    fig4_superposition,
    fig56_phase_size_sweep,
    modulated_resonance,
    fig8_single_point,
    fig9_buildup,
    solver_crosscheck,
};

struct ScenarioInfo {
    ScenarioKind kind;
    const char* name;
    const char* summary;
};

inline const std::vector<ScenarioInfo>& scenario_catalog() {
    static const std::vector<ScenarioInfo> list = {
        {ScenarioKind::fig3_ground, "fig3_ground",
         "Excitation from the ground state for several packet durations, with energy balance"},
        {ScenarioKind::fig4_superposition, "fig4_superposition",
         "Incremental excitation from (|1>+i|2>)/sqrt2 at zeta = pi/2, transient interaction energy"},
        {ScenarioKind::fig56_phase_size_sweep, "fig56_phase_size_sweep",
         "Increment over arrival phase and packet size, fitted to the exp(-Gamma^2/2) sin(zeta) law"},
        {ScenarioKind::modulated_resonance, "modulated_resonance",
         "Bunching spectrum of a modulated packet and the detuning scan"},
        {ScenarioKind::fig8_single_point, "fig8_single_point",
         "Single near-point electron, time-domain level populations"},
        {ScenarioKind::fig9_buildup, "fig9_buildup",
         "Correlated versus random electron trains, quadratic and linear growth"},
        {ScenarioKind::solver_crosscheck, "solver_crosscheck",
         "Momentum-amplitude and density-matrix solvers on the same grid and window"},
    };
    return list;
}

inline ScenarioKind parse_scenario(const std::string& s) {
    for (const auto& i : scenario_catalog())
        if (s == i.name) return i.kind;
    throw ConfigError("unknown scenario '" + s + "'");
}

inline const char* to_string(ScenarioKind k) {
    for (const auto& i : scenario_catalog())
        if (i.kind == k) return i.name;
    return "?";
}

enum class SolverKind { density, momentum, born };

inline const char* to_string(SolverKind s) {
    switch (s) {
        case SolverKind::density: return "density";
        case SolverKind::momentum: return "momentum";
        default: return "born";
    }
}

enum class ElectronsPerEnvelope { one, poisson };

struct PhysicsConfig {
    double kinetic_energy_kev = 200.0;
    double impact_parameter_nm = 2.4;
    double energy_gap_ev = 2.0;
    double dipole_debye = 5.0;
    Orientation orientation = Orientation::transverse;
    double sigma_ratio = 0.1;  // sigma_et / T21
    std::string initial_state = "ground";
    double superposition_phase_rad = pi / 2.0;
    double zeta_rad = pi / 2.0;
    double arrival_time_fs = 0.0;
    double photon_energy_ev = 1.0;  // modulation quantum, E21 / 2
    double pinem_coupling = 1.5;
    double pinem_phase_rad = 0.0;
    double drift_time_fs = 0.0;  // 0 selects the optimal drift
    double envelope_sigma_fs = 12.0;
};

struct NumericsConfig {
    int grid_points = 256;
    double cutoff_scale = 1.0;
    double window_transit = 10.0;
    double window_sigma = 6.0;
    double samples_per_scale = 100.0;
    Integrator integrator = Integrator::rk4;
    double dt_fs = 0.0;
    int time_samples = 400;
    SolverKind solver = SolverKind::density;
    MatrixElementConvention matrix_element = MatrixElementConvention::exact;
    PrefactorConvention prefactor = PrefactorConvention::main_text;
    int z_oversample = 32;
    bool write_rho_b = false;
};

struct SweepConfig {
    std::vector<double> sigma_ratios{0.1, 0.3, 1.0};
    double gamma_min = 0.1;
    double gamma_max = 1.5;
    int gamma_count = 8;
    int zeta_count = 12;
    int detuning_count = 41;
    double detuning_span = 4.0;  // in units of 1 / sigma_et
    int n_correlated = 20;
    int n_random = 400;
    int random_seeds = 256;
    double mean_spacing_periods = 50.0;
    ElectronsPerEnvelope electrons_per_envelope = ElectronsPerEnvelope::one;
    bool density_crosscheck = true;
};

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::fig3_ground;
    std::uint64_t seed = 1;
    std::string output_dir = "results";
    PhysicsConfig physics;
    NumericsConfig numerics;
    SweepConfig sweep;
    std::string source;  // config text as read
};

namespace detail {

inline int find_line(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream in(text);
    std::string line, current;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        if (line[b] == '[') {
            const auto e = line.find(']', b);
            current = line.substr(b + 1, e == std::string::npos ? std::string::npos : e - b - 1);
            continue;
        }
        const auto eq = line.find('=', b);
        if (eq == std::string::npos) continue;
        std::string k = line.substr(b, eq - b);
        k.erase(k.find_last_not_of(" \t") + 1);
        if (current == section && k == key) return n;
    }
    return 0;
}

class Reader {
public:
    Reader(const boost::property_tree::ptree& tree, const std::string& text) : tree_(tree), text_(text) {}

    template <typename T>
    void get(const std::string& section, const std::string& key, T& out) {
        used_[section].insert(key);
        const auto* node = section.empty() ? &tree_ : child(section);
        if (!node) return;
        const auto it = node->find(key);
        if (it == node->not_found()) return;
        if (!it->second.empty()) fail(section, key, "expected a value, found a section");
        const std::string raw = it->second.data();
        try {
            if constexpr (std::is_same_v<T, std::string>) {
                out = raw;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (raw == "true" || raw == "1" || raw == "yes") out = true;
                else if (raw == "false" || raw == "0" || raw == "no") out = false;
                else throw std::invalid_argument(raw);
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                out.clear();
                std::stringstream ss(raw);
                std::string item;
                while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
                if (out.empty()) throw std::invalid_argument(raw);
            } else if constexpr (std::is_integral_v<T>) {
                std::size_t pos = 0;
                const long long v = std::stoll(raw, &pos);
                if (raw.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(raw);
                out = static_cast<T>(v);
            } else {
                out = parse_double(raw);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail(section, key, "cannot parse value '" + raw + "'");
        }
    }

    template <typename E, typename F>
    void get_enum(const std::string& section, const std::string& key, E& out, F parse) {
        std::string raw;
        get(section, key, raw);
        if (raw.empty()) return;
        try {
            out = parse(raw);
        } catch (const std::exception&) {
            fail(section, key, "invalid choice '" + raw + "'");
        }
    }

    // Rejects keys and sections that were never requested.
    void check_unknown() const {
        for (const auto& [name, node] : tree_) {
            if (node.empty()) {
                if (!used_.count("") || !used_.at("").count(name)) fail("", name, "unknown key");
                continue;
            }
            if (!used_.count(name)) throw ConfigError("unknown section [" + name + "]");
            for (const auto& [key, leaf] : node)
                if (!used_.at(name).count(key)) fail(name, key, "unknown key");
        }
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
        const int line = find_line(text_, section, key);
        std::string where = section.empty() ? key : "[" + section + "] " + key;
        throw ConfigError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + where + ": " + what);
    }

private:
    static double parse_double(const std::string& s) {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (s.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(s);
        return v;
    }
    const boost::property_tree::ptree* child(const std::string& s) const {
        const auto it = tree_.find(s);
        return it == tree_.not_found() ? nullptr : &it->second;
    }
    const boost::property_tree::ptree& tree_;
    const std::string& text_;
    std::map<std::string, std::set<std::string>> used_;
};

}  // namespace detail

// Value-range violations; empty when the config is usable.
inline std::vector<std::string> config_violations(const ScenarioConfig& c) {
    std::vector<std::string> out;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) out.push_back(what);
    };
    const auto& p = c.physics;
    const auto& n = c.numerics;
    const auto& s = c.sweep;
    need(p.kinetic_energy_kev > 0.0, "[physics] kinetic_energy_kev must be positive");
    need(p.impact_parameter_nm > 0.0, "[physics] impact_parameter_nm must be positive");
    need(p.energy_gap_ev > 0.0, "[physics] energy_gap_ev must be positive");
    need(p.dipole_debye > 0.0, "[physics] dipole_debye must be positive");
    need(p.sigma_ratio > 0.0, "[physics] sigma_ratio must be positive");
    need(p.initial_state == "ground" || p.initial_state == "excited" || p.initial_state == "superposition",
         "[physics] initial_state must be ground, excited or superposition");
    need(p.photon_energy_ev > 0.0, "[physics] photon_energy_ev must be positive");
    need(p.pinem_coupling >= 0.0, "[physics] pinem_coupling must be non-negative");
    need(p.drift_time_fs >= 0.0, "[physics] drift_time_fs must be non-negative");
    need(p.envelope_sigma_fs > two_pi * constants::hbar / p.photon_energy_ev,
         "[physics] envelope_sigma_fs must exceed one modulation period");
    need(n.grid_points >= 64 && n.grid_points % 2 == 0, "[numerics] grid_points must be even and at least 64");
    need(n.cutoff_scale >= 1.0, "[numerics] cutoff_scale must be at least 1");
    need(n.window_transit > 0.0 && n.window_sigma >= 0.0, "[numerics] window multiples must be positive");
    need(n.samples_per_scale >= 20.0, "[numerics] samples_per_scale must be at least 20");
    need(n.dt_fs >= 0.0, "[numerics] dt_fs must be non-negative");
    need(n.time_samples >= 2, "[numerics] time_samples must be at least 2");
    need(n.z_oversample >= 1, "[numerics] z_oversample must be positive");
    for (double r : s.sigma_ratios) need(r > 0.0, "[sweep] sigma_ratios must be positive");
    need(s.gamma_min > 0.0 && s.gamma_max >= s.gamma_min, "[sweep] gamma range invalid");
    need(s.gamma_count >= 2 && s.zeta_count >= 4, "[sweep] gamma_count >= 2 and zeta_count >= 4 required");
    need(s.detuning_count >= 5 && s.detuning_span > 0.0, "[sweep] detuning scan invalid");
    need(s.n_correlated >= 1 && s.n_random >= 1 && s.random_seeds >= 1, "[sweep] electron counts must be positive");
    need(s.mean_spacing_periods >= 1.0, "[sweep] mean_spacing_periods must be at least 1");
    return out;
}

inline void check_config(const ScenarioConfig& c) {
    const auto v = config_violations(c);
    if (v.empty()) return;
    std::string msg = v.front();
    for (std::size_t i = 1; i < v.size(); ++i) msg += "; " + v[i];
    throw ConfigError(msg);
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
    }
    ScenarioConfig c;
    c.source = text;
    detail::Reader r(tree, text);
    std::string scenario;
    r.get("", "scenario", scenario);
    if (scenario.empty()) throw ConfigError("missing top-level key 'scenario'");
    try {
        c.scenario = parse_scenario(scenario);
    } catch (const ConfigError&) {
        r.fail("", "scenario", "unknown scenario '" + scenario + "'");
    }
    r.get("", "seed", c.seed);
    r.get("", "output_dir", c.output_dir);

    auto& p = c.physics;
    r.get("physics", "kinetic_energy_kev", p.kinetic_energy_kev);
    r.get("physics", "impact_parameter_nm", p.impact_parameter_nm);
    r.get("physics", "energy_gap_ev", p.energy_gap_ev);
    r.get("physics", "dipole_debye", p.dipole_debye);
    r.get_enum("physics", "orientation", p.orientation, [](const std::string& s) {
        if (s == "transverse") return Orientation::transverse;
        if (s == "parallel") return Orientation::parallel;
        throw ConfigError(s);
    });
    r.get("physics", "sigma_ratio", p.sigma_ratio);
    r.get("physics", "initial_state", p.initial_state);
    r.get("physics", "superposition_phase_rad", p.superposition_phase_rad);
    r.get("physics", "zeta_rad", p.zeta_rad);
    r.get("physics", "arrival_time_fs", p.arrival_time_fs);
    r.get("physics", "photon_energy_ev", p.photon_energy_ev);
    r.get("physics", "pinem_coupling", p.pinem_coupling);
    r.get("physics", "pinem_phase_rad", p.pinem_phase_rad);
    r.get("physics", "drift_time_fs", p.drift_time_fs);
    r.get("physics", "envelope_sigma_fs", p.envelope_sigma_fs);

    auto& n = c.numerics;
    r.get("numerics", "grid_points", n.grid_points);
    r.get("numerics", "cutoff_scale", n.cutoff_scale);
    r.get("numerics", "window_transit", n.window_transit);
    r.get("numerics", "window_sigma", n.window_sigma);
    r.get("numerics", "samples_per_scale", n.samples_per_scale);
    r.get_enum("numerics", "integrator", n.integrator, [](const std::string& s) {
        if (s == "rk4") return Integrator::rk4;
        if (s == "euler") return Integrator::euler;
        throw ConfigError(s);
    });
    r.get("numerics", "dt_fs", n.dt_fs);
    r.get("numerics", "time_samples", n.time_samples);
    r.get_enum("numerics", "solver", n.solver, [](const std::string& s) {
        if (s == "density") return SolverKind::density;
        if (s == "momentum") return SolverKind::momentum;
        if (s == "born") return SolverKind::born;
        throw ConfigError(s);
    });
    r.get_enum("numerics", "matrix_element", n.matrix_element, [](const std::string& s) {
        if (s == "exact") return MatrixElementConvention::exact;
        if (s == "printed") return MatrixElementConvention::printed;
        throw ConfigError(s);
    });
    r.get_enum("numerics", "prefactor", n.prefactor, [](const std::string& s) {
        if (s == "main_text") return PrefactorConvention::main_text;
        if (s == "appendix") return PrefactorConvention::appendix;
        throw ConfigError(s);
    });
    r.get("numerics", "z_oversample", n.z_oversample);
    r.get("numerics", "write_rho_b", n.write_rho_b);

    auto& s = c.sweep;
    r.get("sweep", "sigma_ratios", s.sigma_ratios);
    r.get("sweep", "gamma_min", s.gamma_min);
    r.get("sweep", "gamma_max", s.gamma_max);
    r.get("sweep", "gamma_count", s.gamma_count);
    r.get("sweep", "zeta_count", s.zeta_count);
    r.get("sweep", "detuning_count", s.detuning_count);
    r.get("sweep", "detuning_span", s.detuning_span);
    r.get("sweep", "n_correlated", s.n_correlated);
    r.get("sweep", "n_random", s.n_random);
    r.get("sweep", "random_seeds", s.random_seeds);
    r.get("sweep", "mean_spacing_periods", s.mean_spacing_periods);
    r.get_enum("sweep", "electrons_per_envelope", s.electrons_per_envelope, [](const std::string& v) {
        if (v == "one") return ElectronsPerEnvelope::one;
        if (v == "poisson") return ElectronsPerEnvelope::poisson;
        throw ConfigError(v);
    });
    r.get("sweep", "density_crosscheck", s.density_crosscheck);

    r.check_unknown();
    return c;
}

// Syntax, types and unknown keys only; see check_config for value ranges.
inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Derived physical objects shared by all scenarios.
struct PhysicalSetup {
    ElectronKinematics kin;
    TlsSpec tls;
    DipoleCoupling coupling;
};

inline PhysicalSetup physical_setup(const ScenarioConfig& c) {
    PhysicalSetup s;
    s.kin = kinematics_from_kinetic_energy(c.physics.kinetic_energy_kev * units::kev);
    s.tls = make_tls(c.physics.energy_gap_ev, c.physics.dipole_debye, c.physics.orientation);
    s.coupling = make_coupling(s.tls, c.physics.impact_parameter_nm, s.kin, c.numerics.matrix_element);
    return s;
}

inline SolverOptions solver_options(const ScenarioConfig& c) {
    SolverOptions o;
    o.grid_points = c.numerics.grid_points;
    o.cutoff_scale = c.numerics.cutoff_scale;
    o.window.transit_multiple = c.numerics.window_transit;
    o.window.sigma_multiple = c.numerics.window_sigma;
    o.window.samples_per_scale = c.numerics.samples_per_scale;
    o.dt = c.numerics.dt_fs;
    o.integrator = c.numerics.integrator;
    o.samples = c.numerics.time_samples;
    return o;
}

}  // namespace feberi
