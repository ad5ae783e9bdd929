#pragma once
// Closed-form transition increments for single, modulated and multi-electron passages.

#include <cmath>
#include <complex>

#include "feberi/core.hpp"
#include "feberi/coulomb.hpp"
#include "feberi/qew.hpp"

namespace feberi {

// main_text: amplitude Mt/(hbar v0). appendix: amplitude Mt/(2 pi hbar v0).
enum class PrefactorConvention { main_text, appendix };

inline const char* to_string(PrefactorConvention c) {
    return c == PrefactorConvention::main_text ? "main_text" : "appendix";
}

enum class IncrementModel { momentum, born };

struct TransitionIncrement {
    double dp1 = 0.0;
    double dp2 = 0.0;
    IncrementModel model = IncrementModel::momentum;
    unsigned flags = flag_none;

    double total() const { return dp1 + dp2; }
    bool has(Flag f) const { return (flags & f) != 0; }
};

inline double amplitude_scale(const DipoleCoupling& c, PrefactorConvention conv) {
    const double s = 1.0 / (constants::hbar * c.kin.v0);
    return conv == PrefactorConvention::main_text ? s : s / two_pi;
}

// Mt at the recoil momentum of the TLS transition.
inline cplx resonant_matrix_element(const DipoleCoupling& c) {
    return m_tilde(recoil_momentum(c.tls.energy_gap, c.kin.v0), c);
}

// I = exp(-Gamma^2/2) exp(-i omega t0), Gamma = p_rec / (2 sigma_p0).
inline cplx overlap_integral(double p_rec, double sigma_p0, double t0, double omega_ij) {
    if (!(sigma_p0 > 0.0)) throw DomainError("overlap integral needs sigma_p0 > 0");
    const double G = p_rec / (2.0 * sigma_p0);
    return std::polar(std::exp(-0.5 * G * G), -omega_ij * t0);
}

inline Estimate p2_from_ground(const DipoleCoupling& c, PrefactorConvention conv = PrefactorConvention::main_text) {
    Estimate e;
    const double a = std::abs(resonant_matrix_element(c)) * amplitude_scale(c, conv);
    e.value = clamp_probability(a * a, e.flags);
    if (e.value > 0.1) e.flags |= flag_perturbative_limit;
    return e;
}

// First-order increment of P2 from a superposition. Both models give
// (2/hbar v)|Mt||C1 C2| exp(-Gamma^2/2) sin(zeta + arg Mt).
inline Estimate dp1_superposition(const DipoleCoupling& c, const TlsState& s, double t0, double sigma_et,
                                  PrefactorConvention conv = PrefactorConvention::main_text) {
    Estimate e;
    const double amp = std::abs(s.c1 * s.c2);
    if (amp <= 1e-14) {
        e.flags |= flag_no_dipole_phase;
        return e;
    }
    const double zeta = bloch_phase(s, t0, c.tls.omega_21);
    const cplx mt = resonant_matrix_element(c);
    const double G = gamma_parameter(c.tls.omega_21, sigma_et);
    e.value = 2.0 * amplitude_scale(c, conv) * std::abs(mt) * amp * std::exp(-0.5 * G * G) *
              std::sin(zeta + std::arg(mt));
    if (G > 1.0) e.flags |= flag_outside_point_regime;
    return e;
}

// Second-order Born increment |C_j Mt/(hbar v)|^2 exp(-Gamma^2).
inline Estimate dp2_born(const DipoleCoupling& c, double sigma_et, double cj_abs2 = 1.0,
                         PrefactorConvention conv = PrefactorConvention::main_text) {
    if (!(sigma_et >= 0.0)) throw DomainError("duration must be non-negative");
    Estimate e;
    const double a = std::abs(resonant_matrix_element(c)) * amplitude_scale(c, conv);
    const double G = gamma_parameter(c.tls.omega_21, sigma_et);
    e.value = clamp_probability(cj_abs2 * a * a * std::exp(-G * G), e.flags);
    if (G > 1.0) e.flags |= flag_outside_point_regime;
    return e;
}

// Second-order momentum-model increment |C_j Mt/(hbar v)|^2, size independent.
inline Estimate dp2_momentum(const DipoleCoupling& c, double cj_abs2 = 1.0,
                             PrefactorConvention conv = PrefactorConvention::main_text) {
    Estimate e;
    const double a = std::abs(resonant_matrix_element(c)) * amplitude_scale(c, conv);
    e.value = clamp_probability(cj_abs2 * a * a, e.flags);
    return e;
}

// Increments of P2 for an electron arriving at t0.
inline TransitionIncrement increments(const DipoleCoupling& c, const TlsState& s, double t0, double sigma_et,
                                      IncrementModel model,
                                      PrefactorConvention conv = PrefactorConvention::main_text) {
    TransitionIncrement out;
    out.model = model;
    const Estimate d1 = dp1_superposition(c, s, t0, sigma_et, conv);
    const Estimate d2 = model == IncrementModel::born ? dp2_born(c, sigma_et, s.p1(), conv)
                                                      : dp2_momentum(c, s.p1(), conv);
    out.dp1 = d1.value;
    out.dp2 = d2.value;
    out.flags = d1.flags | d2.flags;
    return out;
}

struct HarmonicChoice {
    int n = 0;
    double detuning = 0.0;  // omega_21 - n omega_b
    unsigned flags = flag_none;
};

// Nearest harmonic of omega_b; exact half-way ties go to the lower one.
inline HarmonicChoice nearest_harmonic(double omega_21, double omega_b) {
    if (!(omega_b > 0.0)) throw DomainError("modulation frequency must be positive");
    HarmonicChoice h;
    const double x = omega_21 / omega_b;
    const double fl = std::floor(x);
    const double frac = x - fl;
    if (std::abs(frac - 0.5) < 1e-12) {
        h.n = int(fl);
        h.flags |= flag_harmonic_tie;
    } else {
        h.n = int(frac < 0.5 ? fl : fl + 1.0);
    }
    h.detuning = omega_21 - h.n * omega_b;
    return h;
}

// Resonant increments for an envelope at t_0K whose bunching factor is
// f_mod(t - t_L) = sum_m f_m exp(i m omega_b (t - t_L)).
inline TransitionIncrement modulated_increments(const DipoleCoupling& c, const ModulationSpectrum& spec,
                                                double sigma_et, const TlsState& s, double t_L, double t_0K,
                                                PrefactorConvention conv = PrefactorConvention::main_text) {
    if (!(sigma_et > spec.period())) throw DomainError("envelope must be longer than one modulation period");
    TransitionIncrement out;
    out.model = IncrementModel::born;
    const double w = c.tls.omega_21;
    const HarmonicChoice h = nearest_harmonic(w, spec.omega_b);
    out.flags |= h.flags;
    if (std::abs(h.detuning) > 6.0 / sigma_et) out.flags |= flag_off_resonance;
    const cplx fn = std::conj(spec.f(h.n));  // f_{-n}
    const cplx amp = resonant_matrix_element(c) * amplitude_scale(c, conv) / I * s.c1 * fn *
                     std::polar(1.0, h.n * spec.omega_b * t_L + h.detuning * t_0K) *
                     std::exp(-0.5 * h.detuning * h.detuning * sigma_et * sigma_et);
    out.dp1 = 2.0 * std::real(std::conj(s.c2) * amp);
    out.dp2 = std::norm(amp);
    return out;
}

enum class TrainVariant { point_train, modulated_correlated };

// N^2 scaled excitation from the ground state by N phase-locked electrons.
inline Estimate multi_qew_p2(int N, const DipoleCoupling& c, double sigma_et, TrainVariant variant,
                             cplx f_n = {1.0, 0.0}, PrefactorConvention conv = PrefactorConvention::main_text) {
    if (N < 1) throw DomainError("electron count must be at least 1");
    Estimate e;
    const double a = std::abs(resonant_matrix_element(c)) * amplitude_scale(c, conv);
    double p = double(N) * N * a * a;
    if (variant == TrainVariant::point_train) {
        const double G = gamma_parameter(c.tls.omega_21, sigma_et);
        p *= std::exp(-G * G);
    } else {
        p *= std::norm(f_n);
    }
    if (p > 0.5) e.flags |= flag_rabi_regime;
    e.value = clamp_probability(p, e.flags);
    return e;
}

}  // namespace feberi
