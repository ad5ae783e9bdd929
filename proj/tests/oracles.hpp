#pragma once
// Independent reference computations used by the tests. None of these call the
// closed forms they check.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "feberi/coulomb.hpp"
#include "feberi/qew.hpp"

namespace oracle {

using cplx = std::complex<double>;

// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt
inline double bessel_k(double nu, double x) {
    const double t_max = std::acosh(std::max(1.0, 745.0 / x)) + 1.0;
    auto f = [&](double t) { return std::exp(-x * std::cosh(t)) * std::cosh(nu * t); };
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, 0.0, t_max);
}

// Direct Fourier transform of the real-space kernel, int M(z) exp(-i p z / hbar) dz.
inline cplx matrix_element_transform(double p, const feberi::DipoleCoupling& c) {
    const double k = std::abs(p) / feberi::constants::hbar;
    auto m = [&](double z) { return feberi::m_spatial(z, c); };
    if (k == 0.0) {
        if (c.orientation() == feberi::Orientation::parallel) return {0.0, 0.0};
        boost::math::quadrature::tanh_sinh<double> ts;
        return {2.0 * ts.integrate(m, 0.0, std::numeric_limits<double>::infinity()), 0.0};
    }
    // Substitute u = k z so the Ooura weights see unit frequency.
    auto g = [&](double u) { return m(u / k) / k; };
    if (c.orientation() == feberi::Orientation::parallel) {
        boost::math::quadrature::ooura_fourier_sin<double> os(1e-12);
        const double s = os.integrate(g, 1.0).first;
        return {0.0, p > 0.0 ? -2.0 * s : 2.0 * s};
    }
    boost::math::quadrature::ooura_fourier_cos<double> oc(1e-12);
    return {2.0 * oc.integrate(g, 1.0).first, 0.0};
}

// |int c_p^* c_{p - p_rec} dp| for a centred Gaussian of spread sigma_p.
inline double overlap_magnitude(double p_rec, double sigma_p) {
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * sigma_p * sigma_p);
    auto f = [&](double q) {
        return norm * std::exp(-q * q / (4.0 * sigma_p * sigma_p) - (q - p_rec) * (q - p_rec) / (4.0 * sigma_p * sigma_p));
    };
    const double lo = std::min(0.0, p_rec) - 12.0 * sigma_p, hi = std::max(0.0, p_rec) + 12.0 * sigma_p;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
}

// Bunching coefficients as the autocorrelation of the sideband amplitudes.
inline std::vector<cplx> bunching_coefficients(const feberi::ModulatedQewSpec& m, int M, int nmax) {
    std::vector<cplx> a(2 * nmax + 1);
    double total = 0.0;
    for (int n = -nmax; n <= nmax; ++n) {
        const double x = 2.0 * std::abs(m.g);
        const int an = std::abs(n);
        double j = std::cyl_bessel_j(double(an), x);
        if (n < 0 && an % 2 == 1) j = -j;
        const double phase = n * (m.phi_b + std::arg(m.g)) - double(n) * n * m.drift_curvature();
        a[n + nmax] = std::polar(j, phase);
        total += j * j;
    }
    std::vector<cplx> f(2 * M + 1);
    for (int mm = -M; mm <= M; ++mm) {
        cplx s{0.0, 0.0};
        for (int n = -nmax; n <= nmax; ++n) {
            const int k = n + mm;
            if (k < -nmax || k > nmax) continue;
            s += a[n + nmax] * std::conj(a[k + nmax]);
        }
        f[mm + M] = s / total;
    }
    return f;
}

// Resonant response of a point arrival: |int f(t) exp(i w t) dt|^2 on a sampled profile.
inline double spectral_weight(const std::vector<double>& values, double t_start, double step, double omega) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * std::polar(1.0, omega * (t_start + i * step));
    return std::norm(s * step);
}

}  // namespace oracle
