#pragma once
// Modified Bessel functions of the second kind, orders 0 and 1.
// Power series for x <= 2, Steed's continued fraction (Temme variant) above.

#include <cmath>
#include <limits>

#include "feberi/core.hpp"

namespace feberi {

namespace detail {

struct BesselK01 {
    double k0;
    double k1;
};

inline BesselK01 bessel_k01_series(double x) {
    const double y = 0.25 * x * x;
    const double lg = std::log(0.5 * x) + constants::euler_gamma;
    // k-th terms: t = y^k/(k!)^2, u = y^k/(k!(k+1)!)
    double t = 1.0, u = 1.0;
    double harmonic = 0.0;  // H_k
    double i0 = 1.0, i1s = 1.0;
    double s0 = 0.0;
    // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma_E
    double s1 = (1.0 - 2.0 * constants::euler_gamma);
    for (int k = 1; k < 60; ++k) {
        t *= y / (double(k) * k);
        u *= y / (double(k) * (k + 1));
        harmonic += 1.0 / k;
        i0 += t;
        i1s += u;
        s0 += t * harmonic;
        s1 += u * (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * constants::euler_gamma);
        if (t < 1e-18 * i0 && u < 1e-18 * i1s) break;
    }
    const double k0 = -lg * i0 + s0;
    const double i1 = 0.5 * x * i1s;
    const double k1 = 1.0 / x + i1 * std::log(0.5 * x) - 0.25 * x * s1;
    return {k0, k1};
}

inline BesselK01 bessel_k01_fraction(double x) {
    constexpr double eps = 1e-16;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 100000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) break;
    }
    h *= a1;
    const double k0 = std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
    const double k1 = k0 * (x + 0.5 - h) / x;
    return {k0, k1};
}

inline BesselK01 bessel_k01(double x) {
    if (!(x > 0.0)) throw DomainError("modified Bessel K requires x > 0");
    if (x > 745.0) return {0.0, 0.0};
    return x <= 2.0 ? bessel_k01_series(x) : bessel_k01_fraction(x);
}

}  // namespace detail

inline double bessel_k0(double x) { return detail::bessel_k01(x).k0; }
inline double bessel_k1(double x) { return detail::bessel_k01(x).k1; }

}  // namespace feberi
