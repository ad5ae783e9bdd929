#pragma once
// Named experiments: each turns a ScenarioConfig into a ResultBundle.

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "feberi/analytic.hpp"
#include "feberi/born.hpp"
#include "feberi/config.hpp"
#include "feberi/fit.hpp"
#include "feberi/output.hpp"
#include "feberi/qew.hpp"
#include "feberi/solver_density.hpp"
#include "feberi/solver_momentum.hpp"

namespace feberi {

inline constexpr const char* tool_version = "1.0.0";

struct RunContext {
    int jobs = 1;
    std::ostream* log = &std::cerr;
};

// Runs fn(i) for every i in [0, n) on up to `jobs` threads. Workers write
// results by index, so the outcome does not depend on scheduling. The first
// failure by index is rethrown.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    std::vector<std::exception_ptr> errors(std::max(0, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

inline std::uint64_t derived_seed(std::uint64_t base, std::uint64_t index) {
    std::seed_seq seq{std::uint32_t(base), std::uint32_t(base >> 32), std::uint32_t(index),
                      std::uint32_t(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (std::uint64_t(out[0]) << 32) | out[1];
}

inline AssemblyOptions assembly_options(const ScenarioConfig& c) {
    AssemblyOptions a;
    a.oversample = c.numerics.z_oversample;
    return a;
}

// Time series of one passage.
struct PassageRecord {
    std::vector<double> t, p1, p2, d_free, d_bound, d_int, balance, norm;
    std::vector<Eigen::Matrix2cd> rho_b;
    int grid_points = 0;
    double max_norm_drift = 0.0;
    double max_purity_drift = 0.0;

    double increment() const { return p2.back() - p2.front(); }
    double max_abs_balance() const {
        double m = 0.0;
        for (double b : balance)
            if (std::isfinite(b)) m = std::max(m, std::abs(b));
        return m;
    }
};

// One Gaussian packet of fixed duration through the selected solver. The
// density solver keeps its eigendecomposition, so many arrival phases are cheap.
class PassageRunner {
public:
    PassageRunner(const ScenarioConfig& cfg, const PhysicalSetup& ps, double sigma_et)
        : cfg_(cfg), ps_(ps), opts_(solver_options(cfg)), solver_(cfg.numerics.solver) {
        shape_ = gaussian_from_duration(ps.kin, sigma_et, 0.0);
        W_ = solver_half_width(ps.coupling, shape_, opts_);
        if (solver_ == SolverKind::density) {
            grid_ = solver_grid(ps.coupling, shape_, opts_);
            check_box(*grid_, ps.kin, W_);
            h_ = std::make_unique<HamiltonianAssembly>(assemble_hamiltonian(*grid_, ps.coupling, assembly_options(cfg)));
            prop_ = std::make_unique<DensityPropagator>(*h_);
        } else if (solver_ == SolverKind::born) {
            profile_ = std::make_unique<InteractionProfile>(
                interaction_profile(ps.coupling, sigma_et, profile_grid(ps.coupling, sigma_et, opts_.window)));
        } else {
            grid_ = solver_grid(ps.coupling, shape_, opts_);
            check_box(*grid_, ps.kin, W_);
        }
    }

    double half_width() const { return W_; }
    double sigma_et() const { return shape_.sigma_et; }

    PassageRecord run(const TlsState& s, double t0) const {
        GaussianQewSpec q = shape_;
        q.t0 = t0;
        PassageRecord r;
        const double gap = ps_.tls.energy_gap;
        if (solver_ == SolverKind::density) {
            const double t_begin = t0 - W_;
            const Eigen::VectorXcd psi0 =
                initial_vector(gaussian_momentum_amplitudes(q, *grid_), *grid_, *h_, s, t_begin);
            const Eigen::VectorXcd coeff = prop_->coefficients(psi0);
            const int n = std::max(2, opts_.samples);
            EnergyExpectations e0;
            for (int k = 0; k <= n; ++k) {
                const double dt = 2.0 * W_ * k / n;
                const Eigen::VectorXcd psi = k == 0 ? psi0 : prop_->evolve_coefficients(coeff, dt);
                const Eigen::Matrix2cd rb = bound_density_from_vector(psi);
                const EnergyExpectations e = energy_expectations(psi, *h_);
                if (k == 0) e0 = e;
                const double nrm = psi.squaredNorm();
                push(r, t_begin + dt, rb(0, 0).real(), rb(1, 1).real(), e.free - e0.free, e.bound - e0.bound,
                     e.interaction - e0.interaction, nrm);
                r.max_purity_drift = std::max(r.max_purity_drift, std::abs(nrm * nrm - 1.0));
                r.rho_b.push_back(to_interaction_picture(rb, gap, t_begin + dt));
            }
            r.grid_points = grid_->size;
        } else if (solver_ == SolverKind::momentum) {
            const MomentumTrajectory tr = run_momentum_solver(ps_.coupling, q, s, opts_);
            for (std::size_t k = 0; k < tr.t.size(); ++k)
                push(r, tr.t[k], tr.p1[k], tr.p2[k], tr.free_energy[k] - tr.free_energy[0],
                     gap * (tr.p2[k] - tr.p2[0]), std::nan(""), tr.norm[k]);
            r.grid_points = grid_->size;
        } else {
            const int stride = std::max(1, (profile_->grid.count / 2) / std::max(1, opts_.samples));
            const TlsTrajectory tr = evolve_tls(s, *profile_, ps_.tls.omega_21, t0, stride);
            for (std::size_t k = 0; k < tr.t.size(); ++k)
                push(r, tr.t[k], tr.states[k].p1(), tr.states[k].p2(), std::nan(""),
                     gap * (tr.states[k].p2() - s.p2()), std::nan(""), tr.states[k].norm());
        }
        for (double n : r.norm) r.max_norm_drift = std::max(r.max_norm_drift, std::abs(n - r.norm.front()));
        return r;
    }

    // Net change of P2 over the window.
    double increment(const TlsState& s, double t0) const {
        if (solver_ != SolverKind::density) return run(s, t0).increment();
        GaussianQewSpec q = shape_;
        q.t0 = t0;
        const Eigen::VectorXcd psi0 = initial_vector(gaussian_momentum_amplitudes(q, *grid_), *grid_, *h_, s, t0 - W_);
        const Eigen::VectorXcd psi = prop_->evolve_state(psi0, 2.0 * W_);
        return bound_density_from_vector(psi)(1, 1).real() - bound_density_from_vector(psi0)(1, 1).real();
    }

private:
    static void push(PassageRecord& r, double t, double p1, double p2, double df, double db, double di, double nrm) {
        r.t.push_back(t);
        r.p1.push_back(p1);
        r.p2.push_back(p2);
        r.d_free.push_back(df);
        r.d_bound.push_back(db);
        r.d_int.push_back(di);
        r.balance.push_back(df + db);
        r.norm.push_back(nrm);
    }

    const ScenarioConfig& cfg_;
    const PhysicalSetup& ps_;
    SolverOptions opts_;
    SolverKind solver_;
    GaussianQewSpec shape_;
    double W_ = 0.0;
    std::optional<MomentumGrid> grid_;
    std::unique_ptr<HamiltonianAssembly> h_;
    std::unique_ptr<DensityPropagator> prop_;
    std::unique_ptr<InteractionProfile> profile_;
};

inline nlohmann::ordered_json metadata(const ScenarioConfig& cfg, const PhysicalSetup& ps) {
    nlohmann::ordered_json m;
    m["scenario"] = to_string(cfg.scenario);
    m["tool_version"] = tool_version;
    m["seed"] = cfg.seed;
    m["conventions"] = {{"matrix_element", cfg.numerics.matrix_element == MatrixElementConvention::exact
                                                  ? "exact transform"
                                                  : "printed closed forms"},
                        {"two_pi_prefactor", to_string(cfg.numerics.prefactor)}};
    m["solver"] = to_string(cfg.numerics.solver);
    const cplx mt = resonant_matrix_element(ps.coupling);
    m["derived"] = {{"gamma", ps.kin.gamma},
                    {"beta", ps.kin.beta},
                    {"velocity_nm_per_fs", ps.kin.v0},
                    {"transit_time_fs", ps.coupling.geometry.transit_time},
                    {"period_fs", ps.tls.period()},
                    {"omega_21_rad_per_fs", ps.tls.omega_21},
                    {"recoil_momentum_eV_fs_per_nm", recoil_momentum(ps.tls.energy_gap, ps.kin.v0)},
                    {"matrix_element_abs_eV_nm", std::abs(mt)},
                    {"matrix_element_arg_rad", std::arg(mt)},
                    {"p2_ground_analytic", p2_from_ground(ps.coupling, cfg.numerics.prefactor).value},
                    {"window_truncation_fraction",
                     window_truncation(ps.coupling, cfg.physics.sigma_ratio * ps.tls.period(),
                                       solver_options(cfg).window)}};
    m["config"] = cfg.source;
    return m;
}

inline TlsState configured_superposition(const ScenarioConfig& cfg) {
    return TlsState::equal_superposition(cfg.physics.superposition_phase_rad);
}

// Arrival time that realizes the configured Bloch phase for the state.
inline double arrival_for_phase(const ScenarioConfig& cfg, const PhysicalSetup& ps, double zeta) {
    return wrap_phase(zeta + cfg.physics.superposition_phase_rad) / ps.tls.omega_21;
}

inline Table passage_table(const std::string& name, const PassageRecord& r, double gap_ev) {
    Table t{name, {"t [fs]", "P1", "P2", "dE_F [eV]", "dE_I [eV]", "dE_F + E21 dP2 [eV]"}};
    for (std::size_t k = 0; k < r.t.size(); ++k)
        t.add({r.t[k], r.p1[k], r.p2[k], r.d_free[k], r.d_int[k], r.d_free[k] + gap_ev * (r.p2[k] - r.p2[0])});
    return t;
}

inline std::string ratio_label(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", r);
    std::string s = buf;
    for (char& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

// Single passages for each duration in the sweep (ground or superposition start).
inline ResultBundle run_passage_sweep(const ScenarioConfig& cfg, const RunContext& ctx, bool superposition) {
    const PhysicalSetup ps = physical_setup(cfg);
    const auto& ratios = cfg.sweep.sigma_ratios;
    const int n = int(ratios.size());
    const TlsState s0 = superposition ? configured_superposition(cfg) : TlsState::ground();
    const double t0 = superposition ? arrival_for_phase(cfg, ps, cfg.physics.zeta_rad) : cfg.physics.arrival_time_fs;
    std::vector<PassageRecord> recs(n);
    parallel_for(n, ctx.jobs, [&](int i) {
        const PassageRunner runner(cfg, ps, ratios[i] * ps.tls.period());
        recs[i] = runner.run(s0, t0);
    });

    const IncrementModel model = cfg.numerics.solver == SolverKind::born ? IncrementModel::born : IncrementModel::momentum;
    ResultBundle b;
    b.summary = metadata(cfg, ps);
    b.main = Table{superposition ? "fig4_increments" : "fig3_plateaus",
                   {"sigma_et/T21", "sigma_et [fs]", "Gamma", "dP2", "dP2 analytic", "dP2 analytic with depletion",
                    "relative error",
                    "max |dE_F + E21 dP2| [eV]", "final |dE_F + E21 dP2| [eV]", "max norm drift"}};
    b.main.plot = false;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    double lo = INFINITY, hi = -INFINITY, worst_rel = 0.0, worst_balance = 0.0, worst_drift = 0.0;
    for (int i = 0; i < n; ++i) {
        const double sigma = ratios[i] * ps.tls.period();
        const double G = gamma_parameter(ps.tls.omega_21, sigma);
        const auto& r = recs[i];
        const double dp = r.increment();
        const TransitionIncrement inc = increments(ps.coupling, s0, t0, sigma, model, cfg.numerics.prefactor);
        const double an = inc.total();
        // Second order with depletion of the upper level: (|C1|^2 - |C2|^2) instead of |C1|^2.
        const double an_dep = s0.p1() > 0.0 ? inc.dp1 + inc.dp2 * (s0.p1() - s0.p2()) / s0.p1() : inc.dp1;
        const double rel = std::abs(dp - an_dep) / std::abs(an_dep);
        const double final_bal = std::abs(r.balance.back());
        b.main.add({ratios[i], sigma, G, dp, an, an_dep, rel, r.max_abs_balance(), final_bal, r.max_norm_drift});
        b.series.push_back(passage_table((superposition ? "fig4_sigma_" : "fig3_sigma_") + ratio_label(ratios[i]), r,
                                         ps.tls.energy_gap));
        lo = std::min(lo, dp);
        hi = std::max(hi, dp);
        worst_rel = std::max(worst_rel, rel);
        worst_balance = std::max(worst_balance, superposition ? final_bal : r.max_abs_balance());
        worst_drift = std::max(worst_drift, r.max_norm_drift);
        runs.push_back({{"sigma_ratio", ratios[i]},
                        {"sigma_et_fs", sigma},
                        {"gamma", G},
                        {"grid_points", r.grid_points},
                        {"dP2", dp},
                        {"dP2_analytic", an},
                        {"dP2_analytic_with_depletion", an_dep},
                        {"relative_error", rel},
                        {"max_energy_balance_eV", r.max_abs_balance()},
                        {"final_energy_balance_eV", final_bal},
                        {"max_norm_drift", r.max_norm_drift},
                        {"max_purity_drift", r.max_purity_drift}});
        if (cfg.numerics.write_rho_b && !r.rho_b.empty())
            b.dumps.push_back({(superposition ? "rho_b_fig4_sigma_" : "rho_b_fig3_sigma_") + ratio_label(ratios[i]),
                               std::uint64_t(r.grid_points), r.t.size() > 1 ? r.t[1] - r.t[0] : 0.0, r.rho_b});
    }
    b.summary["initial_state"] = {{"c1", {s0.c1.real(), s0.c1.imag()}}, {"c2", {s0.c2.real(), s0.c2.imag()}}};
    b.summary["arrival_time_fs"] = t0;
    if (superposition) b.summary["zeta_rad"] = bloch_phase(s0, t0, ps.tls.omega_21);
    b.summary["runs"] = runs;
    b.summary["plateau_spread"] = (hi - lo) / std::abs(hi);
    b.summary["max_relative_error_vs_analytic"] = worst_rel;
    b.summary[superposition ? "max_final_energy_balance_eV" : "max_energy_balance_eV"] = worst_balance;
    b.summary["energy_balance_bound_eV"] = 1e-3 * ps.tls.energy_gap;
    b.summary["max_norm_drift"] = worst_drift;
    return b;
}

// Increment over (zeta, Gamma) and its fit to the exp(-Gamma^2/2) sin(zeta) law.
inline ResultBundle run_phase_size_sweep(const ScenarioConfig& cfg, const RunContext& ctx) {
    const PhysicalSetup ps = physical_setup(cfg);
    const auto& sw = cfg.sweep;
    const std::vector<double> gammas = linspace(sw.gamma_min, sw.gamma_max, sw.gamma_count);
    std::vector<double> zetas(sw.zeta_count);
    for (int k = 0; k < sw.zeta_count; ++k) zetas[k] = two_pi * k / sw.zeta_count;
    const TlsState s0 = configured_superposition(cfg);
    const int G = int(gammas.size()), Z = int(zetas.size());
    std::vector<std::vector<double>> dp(G, std::vector<double>(Z));
    std::vector<double> ground(G);
    parallel_for(G, ctx.jobs, [&](int i) {
        const PassageRunner runner(cfg, ps, gammas[i] / ps.tls.omega_21);
        for (int k = 0; k < Z; ++k) dp[i][k] = runner.increment(s0, arrival_for_phase(cfg, ps, zetas[k]));
        ground[i] = runner.increment(TlsState::ground(), 0.0);
    });

    // dP2 = A e^{-G^2/2} sin z + A' e^{-G^2/2} cos z + B e^{-G^2}
    Eigen::MatrixXd X(G * Z, 3);
    Eigen::VectorXd y(G * Z);
    double peak = 0.0;
    for (int i = 0; i < G; ++i)
        for (int k = 0; k < Z; ++k) {
            const double e1 = std::exp(-0.5 * gammas[i] * gammas[i]);
            X.row(i * Z + k) << e1 * std::sin(zetas[k]), e1 * std::cos(zetas[k]), e1 * e1;
            y[i * Z + k] = dp[i][k];
            peak = std::max(peak, std::abs(dp[i][k]));
        }
    const FitResult law = least_squares(X, y);
    const Eigen::VectorXd model = X * Eigen::Map<const Eigen::VectorXd>(law.coefficients.data(), 3);

    ResultBundle b;
    b.summary = metadata(cfg, ps);
    b.main = Table{"fig56_table", {"Gamma", "sigma_et [fs]", "zeta [rad]", "dP2", "dP2 analytic", "dP2 fit"}};
    b.main.plot = false;
    const IncrementModel im = cfg.numerics.solver == SolverKind::born ? IncrementModel::born : IncrementModel::momentum;
    for (int i = 0; i < G; ++i)
        for (int k = 0; k < Z; ++k) {
            const double sigma = gammas[i] / ps.tls.omega_21;
            const double t0 = arrival_for_phase(cfg, ps, zetas[k]);
            b.main.add({gammas[i], sigma, zetas[k], dp[i][k],
                        increments(ps.coupling, s0, t0, sigma, im, cfg.numerics.prefactor).total(), model[i * Z + k]});
        }

    Table slices{"fig56_zeta_slices", {"zeta [rad]"}};
    for (double g : gammas) slices.columns.push_back("dP2 (Gamma=" + format_number(g) + ")");
    for (int k = 0; k < Z; ++k) {
        std::vector<double> row{zetas[k]};
        for (int i = 0; i < G; ++i) row.push_back(dp[i][k]);
        slices.add(row);
    }
    b.series.push_back(slices);

    Table decay{"fig56_size_decay", {"Gamma", "max over zeta dP2", "first-order amplitude", "analytic amplitude",
                                     "ground-start dP2"}};
    decay.log_y = true;
    double min_r2 = 1.0;
    std::vector<double> amp(G);
    for (int i = 0; i < G; ++i) {
        const FitResult f = fit_sinusoid(zetas, dp[i]);
        min_r2 = std::min(min_r2, f.r_squared);
        amp[i] = std::hypot(f.coefficients[1], f.coefficients[2]);
        const double sigma = gammas[i] / ps.tls.omega_21;
        const double an = 2.0 * std::abs(s0.c1 * s0.c2) * amplitude_scale(ps.coupling, cfg.numerics.prefactor) *
                          std::abs(resonant_matrix_element(ps.coupling)) *
                          std::exp(-0.5 * gamma_parameter(ps.tls.omega_21, sigma) *
                                   gamma_parameter(ps.tls.omega_21, sigma));
        decay.add({gammas[i], *std::max_element(dp[i].begin(), dp[i].end()), amp[i], an, ground[i]});
    }
    b.series.push_back(decay);

    b.summary["fit"] = {{"A_sin", law.coefficients[0]},
                        {"A_cos", law.coefficients[1]},
                        {"B", law.coefficients[2]},
                        {"phase_offset_rad", std::atan2(law.coefficients[1], law.coefficients[0])},
                        {"r_squared", law.r_squared},
                        {"max_residual_over_peak", law.max_abs_residual / peak}};
    b.summary["min_zeta_slice_r_squared"] = min_r2;
    const double max_small = *std::max_element(dp.front().begin(), dp.front().end());
    const double max_large = *std::max_element(dp.back().begin(), dp.back().end());
    b.summary["max_increment_small_over_large_size"] = max_small / max_large;
    b.summary["first_over_second_order_at_smallest_gamma"] = amp.front() / ground.front();
    // Peak first-order increment from an equal superposition against sqrt of the ground-start increment.
    b.summary["max_first_order_over_sqrt_ground_increment"] = {
        {"gamma", gammas.front()}, {"ratio", amp.front() / std::sqrt(ground.front())}};
    return b;
}

struct ModulationSetup {
    ModulatedQewSpec spec;
    ModulationSpectrum spectrum;
    double sigma_point = 0.0;  // bunch FWHM / 2.355
};

inline ModulationSetup modulation_setup(const ScenarioConfig& cfg, const PhysicalSetup& ps) {
    const auto& p = cfg.physics;
    const double omega_b = p.photon_energy_ev / constants::hbar;
    const double t_D = p.drift_time_fs > 0.0 ? p.drift_time_fs : optimal_drift_time(ps.kin, p.pinem_coupling, omega_b);
    ModulationSetup m;
    m.spec = make_modulated(gaussian_from_duration(ps.kin, p.envelope_sigma_fs, 0.0), cplx(p.pinem_coupling, 0.0),
                            omega_b, p.pinem_phase_rad, t_D);
    m.spectrum = modulation_fourier_coefficients(m.spec);
    m.sigma_point = bunch_fwhm(m.spectrum) / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    return m;
}

inline nlohmann::ordered_json modulation_json(const ModulationSetup& m) {
    return {{"photon_energy_eV", constants::hbar * m.spec.omega_b},
            {"period_fs", m.spec.period()},
            {"coupling_abs", std::abs(m.spec.g)},
            {"drift_time_fs", m.spec.t_D},
            {"envelope_sigma_fs", m.spec.base.sigma_et},
            {"bunch_fwhm_fs", bunch_fwhm(m.spectrum)},
            {"sigma_point_fs", m.sigma_point}};
}

inline DipoleCoupling coupling_at_frequency(const ScenarioConfig& cfg, const PhysicalSetup& ps, double omega) {
    const TlsSpec tls = make_tls(constants::hbar * omega, cfg.physics.dipole_debye, cfg.physics.orientation);
    return make_coupling(tls, cfg.physics.impact_parameter_nm, ps.kin, cfg.numerics.matrix_element);
}

// Born passage of the full modulated packet (envelope times bunching factor).
inline double born_modulated_increment(const DipoleCoupling& c, const ModulationSetup& m, int samples_per_scale) {
    WindowOptions w;
    w.samples_per_scale = samples_per_scale;
    const double sigma = m.spec.base.sigma_et;
    const TimeGrid g = profile_grid(c, sigma, w);
    std::vector<double> dens(g.count);
    const double norm = 1.0 / (std::sqrt(two_pi) * sigma);
    for (int i = 0; i < g.count; ++i) {
        const double u = g.at(i) / sigma;
        dens[i] = norm * std::exp(-0.5 * u * u) * m.spectrum.value(g.at(i));
    }
    const InteractionProfile prof = interaction_profile_from_density(c, dens, g);
    return evolve_tls(TlsState::ground(), prof, c.tls.omega_21, 0.0, 1 << 30).final_state().p2();
}

inline ResultBundle run_modulated_resonance(const ScenarioConfig& cfg, const RunContext& ctx) {
    const PhysicalSetup ps = physical_setup(cfg);
    const ModulationSetup m = modulation_setup(cfg, ps);
    const double sigma = m.spec.base.sigma_et;
    const auto conv = cfg.numerics.prefactor;
    ResultBundle b;
    b.summary = metadata(cfg, ps);
    b.summary["modulation"] = modulation_json(m);

    Table spec{"bunching_spectrum", {"harmonic m", "|f_m|", "|J_m(4|g| sin(m eps))|"}};
    const double eps = m.spec.drift_curvature();
    for (int k = 0; k <= m.spectrum.M; ++k)
        spec.add({double(k), std::abs(m.spectrum.f(k)), std::abs(bessel_j(k, 4.0 * std::abs(m.spec.g) * std::sin(k * eps)))});
    b.series.push_back(spec);

    Table prof{"bunch_profile", {"t [fs]", "bunching factor"}};
    for (int k = 0; k <= 400; ++k) {
        const double t = -m.spec.period() + 2.0 * m.spec.period() * k / 400;
        prof.add({t, m.spectrum.value(t)});
    }
    b.series.push_back(prof);

    const HarmonicChoice h = nearest_harmonic(ps.tls.omega_21, m.spec.omega_b);
    const double centre = h.n * m.spec.omega_b;
    const int nd = cfg.sweep.detuning_count;
    const std::vector<double> det = linspace(-cfg.sweep.detuning_span / sigma, cfg.sweep.detuning_span / sigma, nd);
    Table scan{"resonance_scan", {"detuning [rad/fs]", "omega_21 [rad/fs]", "dP2", "Gaussian reference"}};
    std::vector<double> vals(nd);
    for (int i = 0; i < nd; ++i)
        vals[i] = modulated_increments(coupling_at_frequency(cfg, ps, centre + det[i]), m.spectrum, sigma,
                                       TlsState::ground(), 0.0, 0.0, conv)
                      .dp2;
    const double peak = *std::max_element(vals.begin(), vals.end());
    for (int i = 0; i < nd; ++i) scan.add({det[i], centre + det[i], vals[i], peak * std::exp(-det[i] * det[i] * sigma * sigma)});
    b.main = scan;
    b.main.name = "resonance_scan";

    std::vector<double> xs, ly;
    for (int i = 0; i < nd; ++i)
        if (vals[i] > 1e-6 * peak) {
            xs.push_back(det[i]);
            ly.push_back(std::log(vals[i]));
        }
    const FitResult q = fit_quadratic(xs, ly);
    const double half_width = q.coefficients[2] < 0.0 ? 1.0 / std::sqrt(-q.coefficients[2]) : INFINITY;
    const double centre_shift = q.coefficients[2] < 0.0 ? -q.coefficients[1] / (2.0 * q.coefficients[2]) : NAN;
    b.summary["resonance"] = {{"harmonic", h.n},
                              {"harmonic_tie", (h.flags & flag_harmonic_tie) != 0},
                              {"configured_detuning_rad_per_fs", h.detuning},
                              {"fitted_half_width_rad_per_fs", half_width},
                              {"expected_half_width_rad_per_fs", 1.0 / sigma},
                              {"half_width_relative_error", std::abs(half_width * sigma - 1.0)},
                              {"fitted_centre_shift_rad_per_fs", centre_shift},
                              {"log_fit_r_squared", q.r_squared},
                              {"peak_dP2", peak},
                              {"f_minus_n_abs", std::abs(m.spectrum.f(-h.n))}};

    // Born spot-check at three detunings.
    const std::vector<double> spot{0.0, 0.5 / sigma, 1.0 / sigma};
    std::vector<double> born(spot.size()), an(spot.size());
    parallel_for(int(spot.size()), ctx.jobs, [&](int i) {
        const DipoleCoupling c = coupling_at_frequency(cfg, ps, centre + spot[i]);
        born[i] = born_modulated_increment(c, m, 25);
        an[i] = modulated_increments(c, m.spectrum, sigma, TlsState::ground(), 0.0, 0.0, conv).dp2;
    });
    Table st{"born_spot_check", {"detuning [rad/fs]", "dP2 Born", "dP2 analytic", "relative difference"}};
    st.plot = false;
    double worst = 0.0;
    for (std::size_t i = 0; i < spot.size(); ++i) {
        const double rel = std::abs(born[i] - an[i]) / an[i];
        worst = std::max(worst, rel);
        st.add({spot[i], born[i], an[i], rel});
    }
    b.series.push_back(st);
    b.summary["born_spot_check_max_relative_difference"] = worst;

    Table over{"harmonic_overview", {"omega_21/omega_b", "dP2"}};
    over.log_y = true;
    const int nmax = std::max(2, m.spectrum.M);
    for (int k = 0; k <= 40 * nmax; ++k) {
        const double x = 0.55 + (nmax - 0.1) * k / (40.0 * nmax);
        if (std::abs(x - std::floor(x) - 0.5) < 1e-9) continue;
        const DipoleCoupling c = coupling_at_frequency(cfg, ps, x * m.spec.omega_b);
        over.add({x, modulated_increments(c, m.spectrum, sigma, TlsState::ground(), 0.0, 0.0, conv).dp2});
    }
    b.series.push_back(over);
    return b;
}

inline ResultBundle run_single_point(const ScenarioConfig& cfg, const RunContext&) {
    const PhysicalSetup ps = physical_setup(cfg);
    const ModulationSetup m = modulation_setup(cfg, ps);
    WindowOptions w;
    w.transit_multiple = cfg.numerics.window_transit;
    w.sigma_multiple = cfg.numerics.window_sigma;
    w.samples_per_scale = cfg.numerics.samples_per_scale;
    const InteractionProfile prof = interaction_profile(ps.coupling, m.sigma_point, profile_grid(ps.coupling, m.sigma_point, w));
    const int stride = std::max(1, (prof.grid.count / 2) / std::max(1, cfg.numerics.time_samples));
    const TlsTrajectory tr = evolve_tls(TlsState::ground(), prof, ps.tls.omega_21, 0.0, stride);
    ResultBundle b;
    b.summary = metadata(cfg, ps);
    b.summary["modulation"] = modulation_json(m);
    b.main = Table{"fig8_populations", {"t [fs]", "P1", "P2", "interaction [eV]"}};
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const long idx = std::lround((tr.t[k] - prof.grid.start) / prof.grid.step);
        b.main.add({tr.t[k], tr.states[k].p1(), tr.states[k].p2(),
                    prof.values[std::size_t(std::clamp<long>(idx, 0, prof.grid.count - 1))]});
    }
    const double p2 = tr.final_state().p2();
    const Estimate an = dp2_born(ps.coupling, m.sigma_point, 1.0, cfg.numerics.prefactor);
    b.summary["gamma"] = gamma_parameter(ps.tls.omega_21, m.sigma_point);
    b.summary["final_p2"] = p2;
    b.summary["p2_analytic_point_model"] = an.value;
    b.summary["relative_error"] = std::abs(p2 - an.value) / an.value;
    b.summary["max_norm_drift"] = tr.max_norm_drift;
    return b;
}

inline ResultBundle run_buildup(const ScenarioConfig& cfg, const RunContext& ctx) {
    const PhysicalSetup ps = physical_setup(cfg);
    const ModulationSetup m = modulation_setup(cfg, ps);
    const auto& sw = cfg.sweep;
    const double omega = ps.tls.omega_21;
    const double spacing = sw.mean_spacing_periods * m.spec.period();
    WindowOptions w;
    w.transit_multiple = cfg.numerics.window_transit;
    w.sigma_multiple = cfg.numerics.window_sigma;
    w.samples_per_scale = cfg.numerics.samples_per_scale;
    const InteractionProfile prof = interaction_profile(ps.coupling, m.sigma_point, profile_grid(ps.coupling, m.sigma_point, w));
    const Eigen::Matrix2cd U0 = passage_matrix(prof, omega);
    const HarmonicChoice h = nearest_harmonic(omega, m.spec.omega_b);
    if (std::abs(h.detuning) > 1e-9 * omega)
        *ctx.log << "warning: transition is detuned from harmonic " << h.n << " by " << h.detuning << " rad/fs\n";

    // Electrons per envelope slot; with the Poisson option extra electrons take the following peaks.
    auto expand = [&](const ArrivalSchedule& s, std::uint64_t seed) {
        std::vector<std::vector<double>> slots(s.times.size());
        std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
        std::poisson_distribution<int> pois(1.0);
        for (std::size_t k = 0; k < s.times.size(); ++k) {
            const int count = sw.electrons_per_envelope == ElectronsPerEnvelope::one ? 1 : pois(rng);
            for (int j = 0; j < count; ++j) slots[k].push_back(s.times[k] + j * m.spec.period());
        }
        return slots;
    };
    auto train = [&](const std::vector<std::vector<double>>& slots) {
        std::vector<double> p2;
        TlsState s = TlsState::ground();
        for (const auto& slot : slots) {
            for (double t : slot) s = apply_passage(U0, omega, t, s);
            p2.push_back(s.p2());
        }
        return p2;
    };

    const ArrivalSchedule corr = arrival_schedule(ScheduleKind::correlated, sw.n_correlated, m.spec.omega_b, 0.0,
                                                  spacing, cfg.seed);
    const auto corr_slots = expand(corr, cfg.seed);
    const std::vector<double> pc = train(corr_slots);

    std::vector<std::vector<double>> pr(sw.random_seeds);
    parallel_for(sw.random_seeds, ctx.jobs, [&](int k) {
        const std::uint64_t seed = derived_seed(cfg.seed, std::uint64_t(k));
        const ArrivalSchedule s = arrival_schedule(ScheduleKind::random, sw.n_random, m.spec.omega_b, 0.0, spacing, seed);
        pr[k] = train(expand(s, seed));
    });
    std::vector<double> mean(sw.n_random, 0.0);
    for (int n = 0; n < sw.n_random; ++n) {
        for (const auto& v : pr) mean[n] += v[n];
        mean[n] /= double(sw.random_seeds);
    }

    std::vector<double> pd;
    if (sw.density_crosscheck && sw.electrons_per_envelope == ElectronsPerEnvelope::one) {
        const GaussianQewSpec shape = gaussian_from_duration(ps.kin, m.sigma_point, 0.0);
        Eigen::Matrix2cd rho0 = Eigen::Matrix2cd::Zero();
        rho0(0, 0) = 1.0;
        pd = sequential_multi_qew(rho0, ps.coupling, shape, corr.times, solver_options(cfg), assembly_options(cfg)).p2;
    }

    std::vector<double> nc(sw.n_correlated), nr(sw.n_random);
    for (int i = 0; i < sw.n_correlated; ++i) nc[i] = i + 1;
    for (int i = 0; i < sw.n_random; ++i) nr[i] = i + 1;
    const FitResult quad = fit_pure_quadratic(nc, pc);
    const FitResult quad_full = fit_quadratic(nc, pc);
    const FitResult lin = fit_line(nr, mean);
    const double n_cross = (pc.back() - lin.coefficients[0]) / lin.coefficients[1];
    const double ncorr = sw.n_correlated;

    ResultBundle b;
    b.summary = metadata(cfg, ps);
    b.summary["modulation"] = modulation_json(m);
    b.main = Table{"fig9_buildup", {"N", "P2 correlated", "P2 random mean", "quadratic fit", "linear fit"}};
    b.main.log_y = true;
    for (int n = 1; n <= std::max(sw.n_correlated, sw.n_random); ++n)
        b.main.add({double(n), n <= sw.n_correlated ? pc[n - 1] : NAN, n <= sw.n_random ? mean[n - 1] : NAN,
                    quad.coefficients[0] * n * n, lin.coefficients[0] + lin.coefficients[1] * n});
    Table ct{"fig9_correlated", {"N", "P2 Born train", "quadratic fit"}};
    if (!pd.empty()) ct.columns.push_back("P2 density solver");
    for (int n = 1; n <= sw.n_correlated; ++n) {
        std::vector<double> row{double(n), pc[n - 1], quad.coefficients[0] * n * n};
        if (!pd.empty()) row.push_back(pd[n - 1]);
        ct.add(row);
    }
    b.series.push_back(ct);
    Table rt{"fig9_random", {"N", "P2 ensemble mean", "linear fit"}};
    for (int n = 1; n <= sw.n_random; ++n) rt.add({double(n), mean[n - 1], lin.coefficients[0] + lin.coefficients[1] * n});
    b.series.push_back(rt);

    b.summary["harmonic"] = h.n;
    b.summary["mean_spacing_fs"] = spacing;
    b.summary["electrons_per_envelope"] = sw.electrons_per_envelope == ElectronsPerEnvelope::one ? "one" : "poisson";
    b.summary["correlated_cycles"] = corr.cycles;
    b.summary["random_seeds"] = sw.random_seeds;
    b.summary["quadratic_fit"] = {{"coefficient", quad.coefficients[0]},
                                  {"r_squared", quad.r_squared},
                                  {"general_r_squared", quad_full.r_squared}};
    b.summary["linear_fit"] = {{"intercept", lin.coefficients[0]},
                               {"slope", lin.coefficients[1]},
                               {"r_squared", lin.r_squared}};
    b.summary["ratio_last_over_first"] = pc.back() / pc.front();
    b.summary["ratio_expected"] = ncorr * ncorr;
    b.summary["crossing_N_random"] = n_cross;
    b.summary["crossing_relative_to_N_squared"] = n_cross / (ncorr * ncorr);
    if (!pd.empty()) {
        double worst = 0.0;
        for (int n = 0; n < sw.n_correlated; ++n) worst = std::max(worst, std::abs(pd[n] - pc[n]) / pc[n]);
        // The wave model keeps a size-independent incoherent term, so the gap closes as N grows.
        b.summary["density_vs_born_max_relative_difference"] = worst;
        b.summary["density_vs_born_relative_difference_at_last"] = std::abs(pd.back() - pc.back()) / pc.back();
    }
    return b;
}

inline ResultBundle run_solver_crosscheck(const ScenarioConfig& cfg, const RunContext& ctx) {
    const PhysicalSetup ps = physical_setup(cfg);
    const double sigma = cfg.sweep.sigma_ratios.front() * ps.tls.period();
    const GaussianQewSpec q = gaussian_from_duration(ps.kin, sigma, cfg.physics.arrival_time_fs);
    const SolverOptions o = solver_options(cfg);
    MomentumTrajectory ma;
    DensityRun db;
    parallel_for(2, ctx.jobs, [&](int i) {
        if (i == 0) ma = run_momentum_solver(ps.coupling, q, TlsState::ground(), o);
        else db = run_density_solver(ps.coupling, q, TlsState::ground(), o, assembly_options(cfg));
    });
    const double pa = ma.p2.back(), pb = db.trajectory.p2.back();
    const double an = p2_from_ground(ps.coupling, cfg.numerics.prefactor).value;
    ResultBundle b;
    b.summary = metadata(cfg, ps);
    b.main = Table{"crosscheck", {"sigma_et [fs]", "P2 momentum solver", "P2 density solver", "relative difference",
                                  "P2 analytic"}};
    b.main.plot = false;
    b.main.add({sigma, pa, pb, std::abs(pa - pb) / pb, an});
    Table ta{"crosscheck_momentum", {"t [fs]", "P2", "norm"}};
    for (std::size_t k = 0; k < ma.t.size(); ++k) ta.add({ma.t[k], ma.p2[k], ma.norm[k]});
    Table tb{"crosscheck_density", {"t [fs]", "P2", "trace"}};
    for (std::size_t k = 0; k < db.trajectory.t.size(); ++k) tb.add({db.trajectory.t[k], db.trajectory.p2[k], db.trajectory.trace[k]});
    b.series = {ta, tb};
    double trace_drift = 0.0;
    for (double t : db.trajectory.trace) trace_drift = std::max(trace_drift, std::abs(t - 1.0));
    b.summary["grid_points"] = db.grid.size;
    b.summary["window_half_width_fs"] = 0.5 * (db.t_end - db.t_begin);
    b.summary["p2_momentum"] = pa;
    b.summary["p2_density"] = pb;
    b.summary["relative_difference"] = std::abs(pa - pb) / pb;
    b.summary["momentum_max_norm_drift"] = ma.max_norm_drift;
    b.summary["density_max_trace_drift"] = trace_drift;
    return b;
}

inline ResultBundle run_scenario(const ScenarioConfig& cfg, const RunContext& ctx = {}) {
    check_config(cfg);
    switch (cfg.scenario) {
        case ScenarioKind::fig3_ground: return run_passage_sweep(cfg, ctx, false);
        case ScenarioKind::fig4_superposition: return run_passage_sweep(cfg, ctx, true);
        case ScenarioKind::fig56_phase_size_sweep: return run_phase_size_sweep(cfg, ctx);
        case ScenarioKind::modulated_resonance: return run_modulated_resonance(cfg, ctx);
        case ScenarioKind::fig8_single_point: return run_single_point(cfg, ctx);
        case ScenarioKind::fig9_buildup: return run_buildup(cfg, ctx);
        case ScenarioKind::solver_crosscheck: return run_solver_crosscheck(cfg, ctx);
    }
    throw ConfigError("unhandled scenario");
}

// Dry-run report.
struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;
    bool valid() const { return errors.empty(); }
};

inline ValidationReport validate(const ScenarioConfig& cfg) {
    ValidationReport rep;
    rep.errors = config_violations(cfg);
    if (!rep.valid()) return rep;
    const PhysicalSetup ps = physical_setup(cfg);
    const double omega = ps.tls.omega_21;
    const double tr = ps.coupling.geometry.transit_time;
    auto num = [](double v) { return format_number(v); };
    rep.notes.push_back("scenario " + std::string(to_string(cfg.scenario)) + ", solver " + to_string(cfg.numerics.solver));
    rep.notes.push_back("transit time " + num(tr) + " fs, 1/omega_21 " + num(1.0 / omega) + " fs, period " +
                        num(ps.tls.period()) + " fs");
    if (tr >= 1.0 / omega)
        rep.warnings.push_back("transit time exceeds 1/omega_21: outside near-point-particle validity");
    const Estimate p2 = p2_from_ground(ps.coupling, cfg.numerics.prefactor);
    rep.notes.push_back("single-electron P2 from ground " + num(p2.value) +
                        (p2.has(flag_perturbative_limit) ? " (above perturbative validity)" : " (perturbative)"));
    if (cfg.numerics.window_transit < 5.0 || cfg.numerics.window_sigma < 4.0)
        rep.warnings.push_back("narrow interaction window: truncation error may exceed 1%");

    std::vector<double> sigmas;
    const auto k = cfg.scenario;
    if (k == ScenarioKind::fig3_ground || k == ScenarioKind::fig4_superposition || k == ScenarioKind::solver_crosscheck)
        for (double r : cfg.sweep.sigma_ratios) sigmas.push_back(r * ps.tls.period());
    if (k == ScenarioKind::fig56_phase_size_sweep)
        for (double g : linspace(cfg.sweep.gamma_min, cfg.sweep.gamma_max, cfg.sweep.gamma_count)) sigmas.push_back(g / omega);

    const SolverOptions o = solver_options(cfg);
    const int N = cfg.numerics.grid_points;
    double runtime = 0.0;
    for (double s : sigmas) {
        const double G = gamma_parameter(omega, s);
        const std::string tag = "sigma_et " + num(s) + " fs (Gamma " + num(G) + ")";
        if (cfg.numerics.solver == SolverKind::born && (G >= 1.0 || tr >= 1.0 / omega))
            rep.warnings.push_back(tag + ": outside near-point-particle validity (needs t_r, sigma_et < 1/omega_21)");
        else if (G >= 1.0)
            rep.notes.push_back(tag + ": wave regime");
        else
            rep.notes.push_back(tag + ": near-point-particle regime");
        if (cfg.numerics.solver == SolverKind::born) continue;
        try {
            const GaussianQewSpec q = gaussian_from_duration(ps.kin, s, 0.0);
            const MomentumGrid g = solver_grid(ps.coupling, q, o);
            check_box(g, ps.kin, solver_half_width(ps.coupling, q, o));
        } catch (const Error& e) {
            rep.errors.push_back(tag + ": " + e.what());
        }
    }
    const double dim = 2.0 * N;
    if (cfg.numerics.solver == SolverKind::density || k == ScenarioKind::solver_crosscheck) {
        rep.notes.push_back("density solver memory about " + num(std::round(5.0 * dim * dim * 16.0 / 1048576.0)) +
                            " MiB per worker");
        runtime += 3e-9 * dim * dim * dim * std::max<std::size_t>(1, sigmas.size());
    }
    if (cfg.numerics.solver == SolverKind::momentum || k == ScenarioKind::solver_crosscheck)
        runtime += 2e-8 * double(N) * N * std::max<std::size_t>(1, sigmas.size()) * 100.0;
    if (k == ScenarioKind::fig56_phase_size_sweep) runtime *= 1.0 + 0.05 * cfg.sweep.zeta_count;

    if (k == ScenarioKind::modulated_resonance || k == ScenarioKind::fig8_single_point || k == ScenarioKind::fig9_buildup) {
        try {
            const ModulationSetup m = modulation_setup(cfg, ps);
            const HarmonicChoice h = nearest_harmonic(omega, m.spec.omega_b);
            rep.notes.push_back("modulation period " + num(m.spec.period()) + " fs, drift " + num(m.spec.t_D) +
                                " fs, bunch sigma " + num(m.sigma_point) + " fs");
            rep.notes.push_back("nearest harmonic " + std::to_string(h.n) + ", detuning " + num(h.detuning) + " rad/fs");
            if (h.flags & flag_harmonic_tie) rep.warnings.push_back("transition lies midway between two harmonics");
            if (std::abs(h.detuning) > 6.0 / m.spec.base.sigma_et)
                rep.warnings.push_back("transition far from any modulation harmonic");
            if (gamma_parameter(omega, m.sigma_point) >= 1.0)
                rep.warnings.push_back("bunch width outside near-point-particle validity");
            if (k == ScenarioKind::modulated_resonance) runtime += 3.0;
            if (k == ScenarioKind::fig9_buildup) {
                if (cfg.sweep.density_crosscheck) runtime += 1.0;
                runtime += 1e-6 * cfg.sweep.random_seeds * cfg.sweep.n_random;
            }
        } catch (const Error& e) {
            rep.errors.push_back(std::string("modulation: ") + e.what());
        }
    }
    rep.notes.push_back("estimated runtime " + num(std::max(0.1, runtime)) + " s single-threaded");
    return rep;
}

}  // namespace feberi
