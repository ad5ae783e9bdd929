#pragma once
// Dipole coupling between a passing point charge and a two-level system:
// real-space kernels M(z) and their transforms Mt(p) = int M(z) exp(-i p z / hbar) dz.

#include <cmath>
#include <complex>

#include "feberi/bessel.hpp"
#include "feberi/core.hpp"

namespace feberi {

// exact: closed forms that match direct quadrature of the kernels.
// printed: the literal prefactors of the published closed forms, kept for audit.
// They differ by 2 (parallel) and by 2 gamma sqrt(2 pi) (transverse).
enum class MatrixElementConvention { exact, printed };

inline const char* to_string(MatrixElementConvention c) {
    return c == MatrixElementConvention::exact ? "exact" : "printed";
}

struct DipoleCoupling {
    TlsSpec tls;
    InteractionGeometry geometry;
    ElectronKinematics kin;
    MatrixElementConvention convention = MatrixElementConvention::exact;

    Orientation orientation() const { return tls.orientation; }
    // e^2 |r_21| / (4 pi eps0), eV nm^2
    double strength() const { return constants::coulomb * tls.dipole; }
    // r_perp / gamma, the contracted interaction length
    double contracted_length() const { return geometry.r_perp / kin.gamma; }
};

inline DipoleCoupling make_coupling(const TlsSpec& tls, double r_perp, const ElectronKinematics& kin,
                                    MatrixElementConvention conv = MatrixElementConvention::exact) {
    if (!(tls.dipole > 0.0)) throw DomainError("dipole magnitude must be positive");
    return {tls, make_geometry(r_perp, kin), kin, conv};
}

// Kernel shape divided by the dipole strength, so the strength can be scaled separately.
inline double kernel_shape(double z, const DipoleCoupling& c) {
    const double g = c.kin.gamma;
    const double r = c.geometry.r_perp;
    const double d2 = g * g * z * z + r * r;
    const double denom = d2 * std::sqrt(d2);
    return c.orientation() == Orientation::parallel ? g * z / denom : g * r / denom;
}

inline double m_spatial(double z, const DipoleCoupling& c) {
    return c.strength() * kernel_shape(z, c);
}

inline cplx m_tilde(double p, const DipoleCoupling& c) {
    const double C = c.strength();
    const double g = c.kin.gamma;
    const double r = c.geometry.r_perp;
    const double k = std::abs(p) / constants::hbar;
    const bool exact = c.convention == MatrixElementConvention::exact;
    if (c.orientation() == Orientation::parallel) {
        if (k == 0.0) return {0.0, 0.0};
        const double pref = (exact ? 2.0 : 1.0) * C / (g * g);
        const double val = pref * k * bessel_k0(k * r / g);
        return {0.0, p > 0.0 ? -val : val};
    }
    if (exact) {
        if (k == 0.0) return {2.0 * C / r, 0.0};
        return {2.0 * C / g * k * bessel_k1(k * r / g), 0.0};
    }
    const double pref = C / (g * g) / std::sqrt(two_pi);
    if (k == 0.0) return {pref * g / r, 0.0};
    return {pref * k * bessel_k1(k * r / g), 0.0};
}

// Momentum handed to the electron for an upward transition: -E/v0.
inline double recoil_momentum(double energy_gap, double v0) {
    if (!(v0 > 0.0)) throw DomainError("recoil requires v0 > 0");
    return -energy_gap / v0;
}

}  // namespace feberi
