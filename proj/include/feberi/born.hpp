#pragma once
// Time-domain model: the electron's arrival-time density convolved with the
// dipole kernel gives an energy profile f(t - t0) that drives the two levels.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "feberi/core.hpp"
#include "feberi/coulomb.hpp"

namespace feberi {

// Uniform samples tau_i = start + i * step, relative to the arrival time.
struct TimeGrid {
    double start = 0.0;
    double step = 0.0;
    int count = 0;

    double at(int i) const { return start + i * step; }
    double end() const { return at(count - 1); }
};

struct WindowOptions {
    double transit_multiple = 10.0;
    double sigma_multiple = 6.0;
    double samples_per_scale = 100.0;  // samples per min(t_r, sigma, T21)
};

inline double interaction_half_width(const DipoleCoupling& c, double sigma_et, const WindowOptions& w = {}) {
    return w.transit_multiple * c.geometry.transit_time + w.sigma_multiple * sigma_et;
}

// Symmetric grid with an odd sample count, so tau = 0 is a sample.
inline TimeGrid profile_grid(const DipoleCoupling& c, double sigma_et, const WindowOptions& w = {}) {
    double scale = std::min(c.geometry.transit_time, c.tls.omega_21 > 0.0 ? c.tls.period() : c.geometry.transit_time);
    if (sigma_et > 0.0) scale = std::min(scale, sigma_et);
    const double h = scale / w.samples_per_scale;
    const double W = interaction_half_width(c, sigma_et, w);
    const int half = static_cast<int>(std::ceil(W / h));
    return {-half * h, h, 2 * half + 1};
}

// Share of the point-arrival kernel's one-sided area that falls outside the
// window; the tails decay as 1/t^2 (odd kernel) or 1/t^3 (even kernel).
inline double window_truncation(const DipoleCoupling& c, double sigma_et, const WindowOptions& w = {}) {
    const double x = interaction_half_width(c, sigma_et, w) / c.geometry.transit_time;
    const double root = std::sqrt(1.0 + x * x);
    return c.orientation() == Orientation::parallel ? 1.0 / root : 1.0 - x / root;
}

struct InteractionProfile {
    TimeGrid grid;
    std::vector<double> values;  // eV
    Orientation orientation = Orientation::transverse;
    double sigma_bar = 0.0;  // sigma_et / t_r
    double transit_time = 0.0;

    double integral() const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            s += values[i] * ((i == 0 || i + 1 == values.size()) ? 0.5 : 1.0);
        return s * grid.step;
    }
};

namespace detail {

// out_i = h * sum_j density_j * M(v (tau_i - tau_j)) by zero-padded FFT.
inline std::vector<double> convolve_with_kernel(const DipoleCoupling& c, const std::vector<double>& density,
                                                const TimeGrid& grid) {
    const int n = grid.count;
    const int nk = 2 * n - 1;
    std::size_t nfft = 1;
    while (nfft < std::size_t(n + nk - 1)) nfft <<= 1;
    std::vector<cplx> a(nfft, 0.0), b(nfft, 0.0), A, B;
    for (int j = 0; j < n; ++j) a[j] = density[j];
    for (int k = 0; k < nk; ++k) b[k] = m_spatial(c.kin.v0 * (k - (n - 1)) * grid.step, c);
    Eigen::FFT<double> fft;
    fft.fwd(A, a);
    fft.fwd(B, b);
    for (std::size_t i = 0; i < nfft; ++i) A[i] *= B[i];
    std::vector<cplx> out;
    fft.inv(out, A);
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = out[i + n - 1].real() * grid.step;
    return f;
}

inline void check_profile_grid(const DipoleCoupling& c, double sigma_et, const TimeGrid& grid) {
    if (grid.count < 3 || !(grid.step > 0.0)) throw NumericalError("profile grid is empty");
    const double W = 10.0 * c.geometry.transit_time + 6.0 * sigma_et;
    const double tol = 1e-9 * W + 0.5 * grid.step;
    if (grid.start > -W + tol || grid.end() < W - tol)
        throw NumericalError("profile grid does not cover the interaction window");
    double scale = c.geometry.transit_time;
    if (sigma_et > 0.0) scale = std::min(scale, sigma_et);
    if (grid.step > scale / 20.0 * (1.0 + 1e-12)) throw NumericalError("profile grid step too coarse");
}

}  // namespace detail

// Arrival density: Gaussian of width sigma_et, or a point arrival when sigma_et = 0.
inline InteractionProfile interaction_profile(const DipoleCoupling& c, double sigma_et, const TimeGrid& grid) {
    if (!(sigma_et >= 0.0)) throw DomainError("duration must be non-negative");
    detail::check_profile_grid(c, sigma_et, grid);
    InteractionProfile p;
    p.grid = grid;
    p.orientation = c.orientation();
    p.transit_time = c.geometry.transit_time;
    p.sigma_bar = sigma_et / c.geometry.transit_time;
    if (sigma_et == 0.0) {
        p.values.resize(grid.count);
        for (int i = 0; i < grid.count; ++i) p.values[i] = m_spatial(c.kin.v0 * grid.at(i), c);
        return p;
    }
    std::vector<double> dens(grid.count);
    const double norm = 1.0 / (std::sqrt(two_pi) * sigma_et);
    for (int i = 0; i < grid.count; ++i) {
        const double u = grid.at(i) / sigma_et;
        dens[i] = norm * std::exp(-0.5 * u * u);
    }
    p.values = detail::convolve_with_kernel(c, dens, grid);
    return p;
}

// Arbitrary arrival density (1/fs) sampled on the grid.
inline InteractionProfile interaction_profile_from_density(const DipoleCoupling& c, const std::vector<double>& density,
                                                           const TimeGrid& grid) {
    if (int(density.size()) != grid.count) throw DomainError("density and grid sizes differ");
    if (!(grid.step <= c.geometry.transit_time / 20.0 * (1.0 + 1e-12)))
        throw NumericalError("profile grid step too coarse for the transit time");
    InteractionProfile p;
    p.grid = grid;
    p.orientation = c.orientation();
    p.transit_time = c.geometry.transit_time;
    p.values = detail::convolve_with_kernel(c, density, grid);
    return p;
}

struct TlsTrajectory {
    std::vector<double> t;  // absolute time, fs
    std::vector<TlsState> states;
    double max_norm_drift = 0.0;

    const TlsState& final_state() const { return states.back(); }
};

using TlsVector = std::array<cplx, 2>;

// Integrates i hbar dC1/dt = f e^{-i w t} C2, i hbar dC2/dt = f e^{+i w t} C1
// with classic RK4 at twice the profile spacing, so stage midpoints are samples.
inline TlsTrajectory evolve_tls(const TlsState& state0, const InteractionProfile& profile, double omega_21, double t0,
                                int sample_stride = 1) {
    if (std::abs(state0.norm() - 1.0) > 1e-9) throw DomainError("initial state is not normalized");
    if (profile.grid.count < 3) throw NumericalError("profile too short to integrate");
    namespace ode = boost::numeric::odeint;
    const TimeGrid& g = profile.grid;
    const double h = g.step;
    const auto& f = profile.values;
    auto rhs = [&](const TlsVector& x, TlsVector& dx, double tau) {
        const long idx = std::lround((tau - g.start) / h);
        const double fv = f[std::size_t(std::clamp<long>(idx, 0, g.count - 1))] / constants::hbar;
        const cplx rot = std::polar(1.0, omega_21 * (t0 + tau));
        dx[0] = -I * fv * std::conj(rot) * x[1];
        dx[1] = -I * fv * rot * x[0];
    };
    ode::runge_kutta4<TlsVector> stepper;
    TlsVector x{state0.c1, state0.c2};
    TlsTrajectory out;
    const int steps = (g.count - 1) / 2;
    out.t.reserve(steps / std::max(1, sample_stride) + 2);
    out.states.reserve(out.t.capacity());
    out.t.push_back(t0 + g.start);
    out.states.push_back(state0);
    const double n0 = state0.norm();
    for (int k = 0; k < steps; ++k) {
        const double tau = g.start + 2 * k * h;
        stepper.do_step(rhs, x, tau, 2.0 * h);
        const double drift = std::abs(std::norm(x[0]) + std::norm(x[1]) - n0);
        out.max_norm_drift = std::max(out.max_norm_drift, drift);
        if (!(drift <= 1e-6)) throw NumericalError("norm drift above 1e-6: reduce the profile step");
        if ((k + 1) % std::max(1, sample_stride) == 0 || k + 1 == steps) {
            out.t.push_back(t0 + g.start + 2 * (k + 1) * h);
            out.states.push_back({x[0], x[1]});
        }
    }
    return out;
}

// Passage map for an arrival at t = 0; columns are the images of |1> and |2>.
inline Eigen::Matrix2cd passage_matrix(const InteractionProfile& profile, double omega_21) {
    Eigen::Matrix2cd U;
    const TlsState a = evolve_tls(TlsState::ground(), profile, omega_21, 0.0, 1 << 30).final_state();
    const TlsState b = evolve_tls(TlsState::excited(), profile, omega_21, 0.0, 1 << 30).final_state();
    U << a.c1, b.c1, a.c2, b.c2;
    return U;
}

// The map for arrival t_K is D U0 D^dagger with D = diag(1, exp(i w t_K)).
inline TlsState apply_passage(const Eigen::Matrix2cd& U0, double omega_21, double t_K, const TlsState& s) {
    const cplx d = std::polar(1.0, omega_21 * t_K);
    const cplx b1 = s.c1, b2 = std::conj(d) * s.c2;
    const cplx o1 = U0(0, 0) * b1 + U0(0, 1) * b2;
    const cplx o2 = U0(1, 0) * b1 + U0(1, 1) * b2;
    return {o1, d * o2};
}

enum class ScheduleKind { correlated, random, periodic };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::correlated: return "correlated";
        case ScheduleKind::random: return "random";
        default: return "periodic";
    }
}

struct ArrivalSchedule {
    std::vector<double> times;      // fs
    std::vector<long long> cycles;  // n_K for comb-locked kinds
    ScheduleKind kind = ScheduleKind::periodic;
    std::uint64_t seed = 0;
    double omega_b = 0.0;
    double t0L = 0.0;
};

inline ArrivalSchedule arrival_schedule(ScheduleKind kind, int N, double omega_b, double t0L, double mean_spacing,
                                        std::uint64_t seed) {
    if (N < 1) throw DomainError("schedule needs at least one electron");
    if (kind != ScheduleKind::random && !(omega_b > 0.0)) throw DomainError("comb schedules need omega_b > 0");
    if (kind != ScheduleKind::periodic && !(mean_spacing > 0.0)) throw DomainError("mean spacing must be positive");
    ArrivalSchedule s;
    s.kind = kind;
    s.seed = seed;
    s.omega_b = omega_b;
    s.t0L = t0L;
    std::mt19937_64 rng(seed);
    if (kind == ScheduleKind::random) {
        std::uniform_real_distribution<double> gap(0.5 * mean_spacing, 1.5 * mean_spacing);
        double t = t0L;
        for (int k = 0; k < N; ++k) {
            s.times.push_back(t);
            t += gap(rng);
        }
        return s;
    }
    const double Tb = two_pi / omega_b;
    if (kind == ScheduleKind::periodic) {
        for (int k = 1; k <= N; ++k) s.cycles.push_back(k);
    } else {
        const long long mean = std::max<long long>(1, std::llround(mean_spacing / Tb));
        std::uniform_int_distribution<long long> gap(1, 2 * mean - 1);
        long long n = 0;
        for (int k = 0; k < N; ++k) {
            s.cycles.push_back(n);
            n += gap(rng);
        }
    }
    for (long long n : s.cycles) s.times.push_back(t0L + double(n) * Tb);
    return s;
}

struct TrainResult {
    std::vector<double> p2;  // after each electron
    TlsState final_state;
    std::vector<std::string> warnings;
};

// Sequential passages. Every passage is the same linear map up to the
// arrival-time rotation, so the map is integrated once and reused.
inline TrainResult simulate_train(const TlsState& state0, const ArrivalSchedule& schedule,
                                  const InteractionProfile& profile, double omega_21) {
    TrainResult r;
    const double span = profile.grid.end() - profile.grid.start;
    for (std::size_t k = 1; k < schedule.times.size(); ++k) {
        if (schedule.times[k] - schedule.times[k - 1] < span) {
            r.warnings.push_back("overlap: electrons " + std::to_string(k) + " and " + std::to_string(k + 1) +
                                 " share an interaction window");
            break;
        }
    }
    const Eigen::Matrix2cd U0 = passage_matrix(profile, omega_21);
    TlsState s = state0;
    r.p2.reserve(schedule.times.size());
    for (double tk : schedule.times) {
        s = apply_passage(U0, omega_21, tk, s);
        r.p2.push_back(s.p2());
    }
    r.final_state = s;
    return r;
}

inline TrainResult simulate_train(const TlsState& state0, const ArrivalSchedule& schedule, const DipoleCoupling& c,
                                  double sigma_et_point, const WindowOptions& w = {}) {
    const InteractionProfile p = interaction_profile(c, sigma_et_point, profile_grid(c, sigma_et_point, w));
    return simulate_train(state0, schedule, p, c.tls.omega_21);
}

}  // namespace feberi
