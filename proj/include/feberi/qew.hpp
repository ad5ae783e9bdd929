#pragma once
// Gaussian and laser-modulated electron wavepackets: momentum amplitudes,
// position densities, the size parameter and the bunching spectrum.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "feberi/core.hpp"
#include "feberi/momentum_grid.hpp"

namespace feberi {

struct GaussianQewSpec {
    ElectronKinematics kin;
    double sigma_p0 = 0.0;  // eV fs/nm
    double sigma_z0 = 0.0;  // nm
    double sigma_et = 0.0;  // fs
    double t0 = 0.0;        // fs, centroid at z = 0
};

inline GaussianQewSpec gaussian_from_duration(const ElectronKinematics& kin, double sigma_et, double t0) {
    if (!(sigma_et > 0.0)) throw DomainError("wavepacket duration must be positive");
    if (!(kin.v0 > 0.0)) throw DomainError("wavepacket needs a moving electron");
    GaussianQewSpec s;
    s.kin = kin;
    s.sigma_et = sigma_et;
    s.sigma_z0 = sigma_et * kin.v0;
    s.sigma_p0 = constants::hbar / (2.0 * s.sigma_z0);
    s.t0 = t0;
    return s;
}

inline GaussianQewSpec gaussian_from_momentum_spread(const ElectronKinematics& kin, double sigma_p0, double t0) {
    if (!(sigma_p0 > 0.0)) throw DomainError("momentum spread must be positive");
    return gaussian_from_duration(kin, constants::hbar / (2.0 * sigma_p0) / kin.v0, t0);
}

struct ModulatedQewSpec {
    GaussianQewSpec base;
    cplx g{0.0, 0.0};      // PINEM coupling
    double omega_b = 0.0;  // rad/fs
    double phi_b = 0.0;    // rad
    double t_D = 0.0;      // fs, drift from modulation to interaction
    double delta_p = 0.0;  // hbar omega_b / v0

    double period() const { return two_pi / omega_b; }
    // Phase curvature across sidebands accumulated during the drift.
    double drift_curvature() const {
        return delta_p * delta_p * t_D / (2.0 * base.kin.longitudinal_mass() * constants::hbar);
    }
};

inline ModulatedQewSpec make_modulated(const GaussianQewSpec& base, cplx g, double omega_b, double phi_b, double t_D) {
    if (!(omega_b > 0.0)) throw DomainError("modulation frequency must be positive");
    if (!(base.sigma_et > two_pi / omega_b))
        throw DomainError("envelope must be longer than one modulation period");
    if (!(t_D >= 0.0)) throw DomainError("drift time must be non-negative");
    ModulatedQewSpec m;
    m.base = base;
    m.g = g;
    m.omega_b = omega_b;
    m.phi_b = phi_b;
    m.t_D = t_D;
    m.delta_p = constants::hbar * omega_b / base.kin.v0;
    return m;
}

// J_n for integer n of either sign.
inline double bessel_j(int n, double x) {
    const int a = std::abs(n);
    const double v = std::cyl_bessel_j(double(a), std::abs(x));
    const bool flip = ((n < 0) != (x < 0.0)) && (a % 2 == 1);
    return flip ? -v : v;
}

// Smallest n_max with |J_n(2|g|)| < 1e-8 for all |n| >= n_max.
inline int sideband_cutoff(double abs_g) {
    const double x = 2.0 * abs_g;
    int n = static_cast<int>(std::ceil(x));
    while (std::abs(bessel_j(n, x)) >= 1e-8) ++n;
    return n;
}

// Drift time at which the classical bunching parameter equals one.
inline double optimal_drift_time(const ElectronKinematics& kin, double abs_g, double omega_b) {
    if (!(abs_g > 0.0) || !(omega_b > 0.0)) throw DomainError("optimal drift needs |g| > 0 and omega_b > 0");
    const double dp = constants::hbar * omega_b / kin.v0;
    return kin.longitudinal_mass() * constants::hbar / (2.0 * abs_g * dp * dp);
}

inline double gamma_parameter(double omega, double sigma_et) {
    if (!(omega >= 0.0) || !(sigma_et >= 0.0)) throw DomainError("gamma parameter needs non-negative inputs");
    return omega * sigma_et;
}

namespace detail {
inline void normalize_on_grid(Eigen::VectorXcd& c, double dp) {
    const double mass = c.squaredNorm() * dp;
    if (!(mass > 0.0)) throw NumericalError("wavepacket has no weight on the grid");
    c /= std::sqrt(mass);
}
}  // namespace detail

// Interaction-picture amplitudes with the centroid at z = 0 at t0.
inline Eigen::VectorXcd gaussian_momentum_amplitudes(const GaussianQewSpec& s, const MomentumGrid& grid) {
    const double tail = gaussian_tail_mass(grid.p_cutoff - 0.5 * grid.spacing, s.sigma_p0);
    if (tail > 1e-6) throw NumericalError("grid truncates the wavepacket: tail mass " + std::to_string(tail));
    Eigen::VectorXcd c(grid.size);
    for (int n = 0; n < grid.size; ++n) {
        const double p = grid.point(n);
        const double q = p - s.kin.p0;
        const double env = std::exp(-q * q / (4.0 * s.sigma_p0 * s.sigma_p0));
        c[n] = std::polar(env, s.kin.dispersion(p) * s.t0 / constants::hbar);
    }
    detail::normalize_on_grid(c, grid.spacing);
    return c;
}

// Sideband weight a_n = J_n(2|g|) exp(i n (phi_b + arg g)) exp(-i n^2 eps).
inline cplx sideband_weight(const ModulatedQewSpec& m, int n) {
    const double phase = n * (m.phi_b + std::arg(m.g)) - double(n) * n * m.drift_curvature();
    return std::polar(bessel_j(n, 2.0 * std::abs(m.g)), phase);
}

inline Eigen::VectorXcd modulated_momentum_amplitudes(const ModulatedQewSpec& m, const MomentumGrid& grid) {
    const GaussianQewSpec& s = m.base;
    const int nmax = std::abs(m.g) > 0.0 ? sideband_cutoff(std::abs(m.g)) : 0;
    double lost = 0.0;
    for (int n = -nmax; n <= nmax; ++n) {
        const double w = std::norm(bessel_j(n, 2.0 * std::abs(m.g)));
        const double centre = n * m.delta_p;
        const double hi = grid.p_cutoff - 0.5 * grid.spacing;
        lost += w * 0.5 * (std::erfc((hi - centre) / (std::sqrt(2.0) * s.sigma_p0)) +
                           std::erfc((hi + centre) / (std::sqrt(2.0) * s.sigma_p0)));
    }
    if (lost > 1e-6) throw NumericalError("grid truncates the sidebands: lost mass " + std::to_string(lost));

    const double mstar = s.kin.longitudinal_mass();
    Eigen::VectorXcd c(grid.size);
    for (int k = 0; k < grid.size; ++k) {
        const double p = grid.point(k);
        const double q = p - s.kin.p0;
        cplx sum{0.0, 0.0};
        for (int n = -nmax; n <= nmax; ++n) {
            const double d = q - n * m.delta_p;
            const double env = std::exp(-d * d / (4.0 * s.sigma_p0 * s.sigma_p0));
            if (env == 0.0) continue;
            const double ph = n * (m.phi_b + std::arg(m.g) - m.omega_b * s.t0);
            sum += bessel_j(n, 2.0 * std::abs(m.g)) * env * std::polar(1.0, ph);
        }
        const double phase = s.kin.dispersion(p) * s.t0 / constants::hbar - q * q * m.t_D / (2.0 * mstar * constants::hbar);
        c[k] = sum * std::polar(1.0, phase);
    }
    detail::normalize_on_grid(c, grid.spacing);
    return c;
}

// |Psi(z,t)|^2 of the Gaussian packet, including free spreading away from t0.
inline std::vector<double> density_profile(const GaussianQewSpec& s, double t, const std::vector<double>& z) {
    const double tau = t - s.t0;
    const double chirp = constants::hbar * tau / (2.0 * s.kin.longitudinal_mass() * s.sigma_z0 * s.sigma_z0);
    const double sz = s.sigma_z0 * std::sqrt(1.0 + chirp * chirp);
    const double norm = 1.0 / (std::sqrt(two_pi) * sz);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double xi = z[i] - s.kin.v0 * tau;
        out[i] = norm * std::exp(-xi * xi / (2.0 * sz * sz));
    }
    return out;
}

// Modulated density as a sum of shifted sideband envelopes. The drift clock
// runs from the modulation stage: tau = t_D + (t - t0).
inline std::vector<double> density_profile(const ModulatedQewSpec& m, double t, const std::vector<double>& z) {
    const GaussianQewSpec& s = m.base;
    const int nmax = std::abs(m.g) > 0.0 ? sideband_cutoff(std::abs(m.g)) : 0;
    const double tau = m.t_D + (t - s.t0);
    const double mstar = s.kin.longitudinal_mass();
    const double v = s.kin.v0;
    const double sz = s.sigma_z0;
    const double norm = 1.0 / (std::sqrt(two_pi) * sz);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double xi = z[i] - v * (t - s.t0);
        cplx sum{0.0, 0.0};
        for (int n = -nmax; n <= nmax; ++n) {
            // the phase carries half the group-velocity displacement of the envelope
            const double shift = n * m.delta_p * tau / (2.0 * mstar);
            const double d = xi - 2.0 * shift;
            const double env = std::exp(-d * d / (4.0 * sz * sz));
            const double ph = n * (m.phi_b + std::arg(m.g)) + (n * m.omega_b / v) * (z[i] - v * t - shift);
            sum += bessel_j(n, 2.0 * std::abs(m.g)) * env * std::polar(1.0, ph);
        }
        out[i] = norm * std::norm(sum);
    }
    return out;
}

struct ModulationSpectrum {
    int M = 0;
    double omega_b = 0.0;
    std::vector<cplx> coefficients;  // index m + M

    cplx f(int m) const {
        if (std::abs(m) > M) return {0.0, 0.0};
        return coefficients[m + M];
    }
    double period() const { return two_pi / omega_b; }
    // sum_m f_m exp(i m omega_b t)
    double value(double t) const {
        double acc = 0.0;
        for (int m = -M; m <= M; ++m) acc += std::real(f(m) * std::polar(1.0, m * omega_b * t));
        return acc;
    }
};

// Fourier analysis of the periodic factor |sum_n a_n exp(-i n omega_b t)|^2.
// M = 0 selects the full bandwidth 2 n_max.
inline ModulationSpectrum modulation_fourier_coefficients(const ModulatedQewSpec& m, int M = 0) {
    if (!(m.base.sigma_et > two_pi / m.omega_b))
        throw DomainError("envelope must be longer than one modulation period");
    const int nmax = std::abs(m.g) > 0.0 ? sideband_cutoff(std::abs(m.g)) : 0;
    if (M <= 0) M = std::max(1, 2 * nmax);
    const int K = 64 * std::max(M, 2 * nmax + 1);
    std::vector<cplx> a(2 * nmax + 1);
    for (int n = -nmax; n <= nmax; ++n) a[n + nmax] = sideband_weight(m, n);

    std::vector<double> P(K);
    for (int k = 0; k < K; ++k) {
        const double th = two_pi * k / K;
        cplx s{0.0, 0.0};
        for (int n = -nmax; n <= nmax; ++n) s += a[n + nmax] * std::polar(1.0, -n * th);
        P[k] = std::norm(s);
    }
    ModulationSpectrum out;
    out.M = M;
    out.omega_b = m.omega_b;
    out.coefficients.assign(2 * M + 1, cplx{0.0, 0.0});
    for (int mm = -M; mm <= M; ++mm) {
        cplx acc{0.0, 0.0};
        for (int k = 0; k < K; ++k) acc += P[k] * std::polar(1.0, -mm * two_pi * k / K);
        out.coefficients[mm + M] = acc / double(K);
    }
    const cplx f0 = out.coefficients[M];
    if (!(std::real(f0) > 0.0)) throw NumericalError("modulation has no mean density");
    for (auto& c : out.coefficients) c /= std::real(f0);
    out.coefficients[M] = {1.0, 0.0};
    for (int mm = 1; mm <= M; ++mm) {
        const cplx avg = 0.5 * (out.coefficients[M + mm] + std::conj(out.coefficients[M - mm]));
        out.coefficients[M + mm] = avg;
        out.coefficients[M - mm] = std::conj(avg);
    }
    double lo = 0.0, hi = 0.0;
    for (int k = 0; k < K; ++k) {
        const double v = out.value(out.period() * k / K);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo < -1e-9 * hi)
        throw NumericalError("reconstructed modulation is negative; raise the harmonic cutoff");
    return out;
}

// Full width at half maximum of the bunch in one modulation period.
inline double bunch_fwhm(const ModulationSpectrum& s, int samples = 8192) {
    std::vector<double> v(samples);
    const double T = s.period();
    for (int k = 0; k < samples; ++k) v[k] = s.value(T * k / samples);
    const int kmax = int(std::max_element(v.begin(), v.end()) - v.begin());
    const double peak = v[kmax];
    const double floor = *std::min_element(v.begin(), v.end());
    const double half = 0.5 * peak;
    if (!(floor < half)) return T;
    auto at = [&](int k) { return v[((k % samples) + samples) % samples]; };
    auto crossing = [&](int dir) {
        int k = kmax;
        for (int step = 0; step < samples; ++step) {
            const int next = k + dir;
            if (at(next) <= half) {
                const double a = at(k), b = at(next);
                return (k + dir * (a - half) / (a - b)) * (T / samples);
            }
            k = next;
        }
        return double(k) * T / samples;
    };
    return crossing(+1) - crossing(-1);
}

}  // namespace feberi
