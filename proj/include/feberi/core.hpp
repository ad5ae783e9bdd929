#pragma once
// Units, constants, relativistic kinematics and two-level-system primitives.
// Internal units: energy eV, time fs, length nm. Momentum is eV*fs/nm.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace feberi {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Input outside the domain of an operation.
struct DomainError : Error {
    using Error::Error;
};
// Grid, step or integration problem detected at run time.
struct NumericalError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

namespace constants {
inline constexpr double hbar = 0.6582119569;          // eV fs
inline constexpr double c = 299.792458;               // nm / fs
inline constexpr double electron_rest_energy = 510998.95;  // eV
inline constexpr double coulomb = 1.439964548;        // e^2/(4 pi eps0), eV nm
inline constexpr double electron_mass = electron_rest_energy / (c * c);  // eV fs^2 / nm^2
inline constexpr double euler_gamma = 0.57721566490153286;
}  // namespace constants

namespace units {
inline constexpr double debye = 0.020819434;  // e nm
inline constexpr double attosecond = 1e-3;    // fs
inline constexpr double kev = 1e3;            // eV

inline double debye_to_enm(double d) { return d * debye; }
inline double enm_to_debye(double x) { return x / debye; }
inline double as_to_fs(double t) { return t * attosecond; }
inline double fs_to_as(double t) { return t / attosecond; }
}  // namespace units

// Wraps into [0, 2 pi).
inline double wrap_phase(double phi) {
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

struct ElectronKinematics {
    double kinetic_energy = 0.0;  // eV
    double gamma = 1.0;
    double beta = 0.0;
    double v0 = 0.0;  // nm/fs
    double p0 = 0.0;  // eV fs/nm

    double rest_energy() const { return constants::electron_rest_energy; }
    double total_energy() const { return gamma * constants::electron_rest_energy; }
    // gamma^3 m, the longitudinal mass in the quadratic dispersion.
    double longitudinal_mass() const { return gamma * gamma * gamma * constants::electron_mass; }
    // E_p minus the total energy at p0, to second order in p - p0.
    double dispersion(double p) const {
        const double q = p - p0;
        return v0 * q + q * q / (2.0 * longitudinal_mass());
    }
};

inline ElectronKinematics kinematics_from_kinetic_energy(double kinetic_energy) {
    if (!(kinetic_energy >= 0.0) || !std::isfinite(kinetic_energy))
        throw DomainError("kinetic energy must be finite and non-negative");
    ElectronKinematics k;
    k.kinetic_energy = kinetic_energy;
    const double x = kinetic_energy / constants::electron_rest_energy;
    k.gamma = 1.0 + x;
    // beta*gamma = sqrt(gamma^2 - 1) = sqrt(x (2 + x)), stable near rest.
    const double bg = std::sqrt(x * (2.0 + x));
    k.beta = bg / k.gamma;
    k.v0 = k.beta * constants::c;
    k.p0 = k.gamma * constants::electron_mass * k.v0;
    return k;
}

// Transit time r_perp / (c beta gamma), returned in fs.
inline double transit_time(double r_perp, const ElectronKinematics& kin) {
    if (!(r_perp > 0.0)) throw DomainError("impact parameter must be positive");
    if (!(kin.beta > 0.0)) throw DomainError("electron at rest has no transit");
    return r_perp / (constants::c * kin.beta * kin.gamma);
}

struct InteractionGeometry {
    double r_perp = 0.0;        // nm
    double transit_time = 0.0;  // fs
};

inline InteractionGeometry make_geometry(double r_perp, const ElectronKinematics& kin) {
    return {r_perp, transit_time(r_perp, kin)};
}

enum class Orientation { parallel, transverse };

inline const char* to_string(Orientation o) {
    return o == Orientation::parallel ? "parallel" : "transverse";
}

struct TlsSpec {
    double energy_gap = 0.0;  // eV
    double omega_21 = 0.0;    // rad/fs
    double dipole = 0.0;      // e nm
    Orientation orientation = Orientation::transverse;

    double period() const { return two_pi / omega_21; }
    double dipole_debye() const { return units::enm_to_debye(dipole); }
};

inline TlsSpec make_tls(double energy_gap_ev, double dipole_debye, Orientation o) {
    if (!(energy_gap_ev >= 0.0)) throw DomainError("energy gap must be non-negative");
    if (!(dipole_debye > 0.0)) throw DomainError("dipole magnitude must be positive");
    return {energy_gap_ev, energy_gap_ev / constants::hbar, units::debye_to_enm(dipole_debye), o};
}

// Interaction-picture amplitudes of the two levels.
struct TlsState {
    cplx c1{1.0, 0.0};
    cplx c2{0.0, 0.0};

    double p1() const { return std::norm(c1); }
    double p2() const { return std::norm(c2); }
    double norm() const { return std::norm(c1) + std::norm(c2); }

    static TlsState ground() { return {{1.0, 0.0}, {0.0, 0.0}}; }
    static TlsState excited() { return {{0.0, 0.0}, {1.0, 0.0}}; }
    // (|1> + e^{i phi}|2>)/sqrt(2)
    static TlsState equal_superposition(double phi) {
        const double s = 1.0 / std::sqrt(2.0);
        return {{s, 0.0}, std::polar(s, phi)};
    }
    static TlsState normalized(cplx a, cplx b) {
        const double n = std::sqrt(std::norm(a) + std::norm(b));
        if (!(n > 0.0)) throw DomainError("zero state cannot be normalized");
        return {a / n, b / n};
    }
};

// zeta = omega t0 - arg(c1* c2), in [0, 2 pi).
inline double bloch_phase(const TlsState& s, double t0, double omega_21) {
    constexpr double tiny = 1e-14;
    if (std::abs(s.c1) <= tiny || std::abs(s.c2) <= tiny)
        throw DomainError("phase undefined: state is not a superposition");
    return wrap_phase(omega_21 * t0 - std::arg(std::conj(s.c1) * s.c2));
}

// Warnings and regime notes attached to computed values.
enum Flag : unsigned {
    flag_none = 0,
    flag_perturbative_limit = 1u << 0,   // probability above perturbative validity
    flag_outside_point_regime = 1u << 1, // Gamma > 1
    flag_off_resonance = 1u << 2,
    flag_harmonic_tie = 1u << 3,
    flag_rabi_regime = 1u << 4,
    flag_clamped = 1u << 5,
    flag_no_dipole_phase = 1u << 6,
};

struct Estimate {
    double value = 0.0;
    unsigned flags = flag_none;
    bool has(Flag f) const { return (flags & f) != 0; }
};

inline double clamp_probability(double p, unsigned& flags) {
    if (p < 0.0 || p > 1.0) {
        flags |= flag_clamped;
        return p < 0.0 ? 0.0 : 1.0;
    }
    return p;
}

}  // namespace feberi
