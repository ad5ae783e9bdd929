#pragma once
// Direct integration of the entangled electron/TLS amplitudes on a momentum grid
// (interaction picture).

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "feberi/born.hpp"
#include "feberi/core.hpp"
#include "feberi/coulomb.hpp"
#include "feberi/momentum_grid.hpp"
#include "feberi/qew.hpp"

namespace feberi {

struct EntangledAmplitudes {
    Eigen::VectorXcd v1;  // c_{1,p_n}
    Eigen::VectorXcd v2;  // c_{2,p_n}
    double t = 0.0;

    double p1(double dp) const { return v1.squaredNorm() * dp; }
    double p2(double dp) const { return v2.squaredNorm() * dp; }
    double norm(double dp) const { return p1(dp) + p2(dp); }
};

// Product state C_j c_p at a time before the interaction.
inline EntangledAmplitudes product_state(const Eigen::VectorXcd& free, const TlsState& s, double t) {
    return {s.c1 * free, s.c2 * free, t};
}

struct CouplingMatrices {
    Eigen::MatrixXcd u12;  // dv1/dt = u12 v2
    Eigen::MatrixXcd u21;  // dv2/dt = u21 v1
};

namespace detail {

// K_nm = dp/(2 pi i hbar^2) Mt(p_n - p_m): Toeplitz in n - m.
inline Eigen::MatrixXcd momentum_kernel(const MomentumGrid& grid, const DipoleCoupling& c) {
    const int N = grid.size;
    const cplx pref = grid.spacing / (two_pi * I * constants::hbar * constants::hbar);
    std::vector<cplx> diag(2 * N - 1);
    for (int d = -(N - 1); d <= N - 1; ++d) diag[d + N - 1] = pref * m_tilde(d * grid.spacing, c);
    Eigen::MatrixXcd K(N, N);
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n) K(n, m) = diag[(n - m) + N - 1];
    return K;
}

inline Eigen::VectorXd free_energies(const MomentumGrid& grid, const ElectronKinematics& kin) {
    Eigen::VectorXd e(grid.size);
    for (int n = 0; n < grid.size; ++n) e[n] = kin.dispersion(grid.point(n));
    return e;
}

}  // namespace detail

// U^{ij}_nm(t) = dp/(2 pi i hbar^2) Mt(p_n - p_m) exp(i (E_n - E_m + E_ij) t / hbar)
inline CouplingMatrices coupling_matrix(const MomentumGrid& grid, double t, const DipoleCoupling& c) {
    const Eigen::MatrixXcd K = detail::momentum_kernel(grid, c);
    const Eigen::VectorXd E = detail::free_energies(grid, c.kin);
    const int N = grid.size;
    CouplingMatrices out{Eigen::MatrixXcd(N, N), Eigen::MatrixXcd(N, N)};
    const double E21 = c.tls.energy_gap;
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n) {
            const double base = (E[n] - E[m]) * t / constants::hbar;
            out.u12(n, m) = K(n, m) * std::polar(1.0, base - E21 * t / constants::hbar);
            out.u21(n, m) = K(n, m) * std::polar(1.0, base + E21 * t / constants::hbar);
        }
    return out;
}

enum class Integrator { euler, rk4 };

inline const char* to_string(Integrator i) { return i == Integrator::euler ? "euler" : "rk4"; }

struct MomentumTrajectory {
    std::vector<double> t;
    std::vector<double> p1;
    std::vector<double> p2;
    std::vector<double> free_energy;  // <E_p> minus the beam total energy, eV
    std::vector<double> norm;
    EntangledAmplitudes final_state;
    double max_norm_drift = 0.0;
};

class MomentumPropagator {
public:
    MomentumPropagator(const MomentumGrid& grid, const DipoleCoupling& c)
        : grid_(grid), K_(detail::momentum_kernel(grid, c)), E_(detail::free_energies(grid, c.kin)),
          gap_(c.tls.energy_gap) {}

    // d/dt of (v1, v2) at time t.
    void derivative(const Eigen::VectorXcd& v1, const Eigen::VectorXcd& v2, double t, Eigen::VectorXcd& d1,
                    Eigen::VectorXcd& d2) const {
        const int N = grid_.size;
        Eigen::VectorXcd ph(N);
        for (int n = 0; n < N; ++n) ph[n] = std::polar(1.0, E_[n] * t / constants::hbar);
        const cplx up = std::polar(1.0, gap_ * t / constants::hbar);
        d1.noalias() = K_ * ph.conjugate().cwiseProduct(v2);
        d1 = ph.cwiseProduct(d1) * std::conj(up);
        d2.noalias() = K_ * ph.conjugate().cwiseProduct(v1);
        d2 = ph.cwiseProduct(d2) * up;
    }

    double max_frequency() const {
        return ((E_.maxCoeff() - E_.minCoeff()) + std::abs(gap_)) / constants::hbar;
    }
    double mean_free_energy(const EntangledAmplitudes& a) const {
        return (E_.array() * (a.v1.cwiseAbs2() + a.v2.cwiseAbs2()).array()).sum() * grid_.spacing;
    }
    const MomentumGrid& grid() const { return grid_; }

private:
    MomentumGrid grid_;
    Eigen::MatrixXcd K_;
    Eigen::VectorXd E_;
    double gap_;
};

inline MomentumTrajectory integrate(const EntangledAmplitudes& state0, const MomentumPropagator& prop, double t_end,
                                    double dt, Integrator integrator = Integrator::rk4, int sample_every = 1) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (!(t_end >= state0.t)) throw DomainError("end time precedes start time");
    const double dp = prop.grid().spacing;
    const int steps = std::max(1, static_cast<int>(std::ceil((t_end - state0.t) / dt - 1e-9)));
    const double h = (t_end - state0.t) / steps;
    MomentumTrajectory tr;
    EntangledAmplitudes s = state0;
    const double n0 = s.norm(dp);
    auto record = [&](const EntangledAmplitudes& a) {
        tr.t.push_back(a.t);
        tr.p1.push_back(a.p1(dp));
        tr.p2.push_back(a.p2(dp));
        tr.free_energy.push_back(prop.mean_free_energy(a));
        tr.norm.push_back(a.norm(dp));
    };
    record(s);
    const int N = prop.grid().size;
    Eigen::VectorXcd k1a(N), k1b(N), k2a(N), k2b(N), k3a(N), k3b(N), k4a(N), k4b(N);
    const double drift_limit = integrator == Integrator::euler ? 1e-4 : 1e-6;
    for (int k = 0; k < steps; ++k) {
        const double t = s.t;
        if (integrator == Integrator::euler) {
            prop.derivative(s.v1, s.v2, t, k1a, k1b);
            s.v1 += h * k1a;
            s.v2 += h * k1b;
        } else {
            prop.derivative(s.v1, s.v2, t, k1a, k1b);
            prop.derivative(s.v1 + 0.5 * h * k1a, s.v2 + 0.5 * h * k1b, t + 0.5 * h, k2a, k2b);
            prop.derivative(s.v1 + 0.5 * h * k2a, s.v2 + 0.5 * h * k2b, t + 0.5 * h, k3a, k3b);
            prop.derivative(s.v1 + h * k3a, s.v2 + h * k3b, t + h, k4a, k4b);
            s.v1 += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            s.v2 += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        }
        s.t = state0.t + (k + 1) * h;
        const double nrm = s.norm(dp);
        if (!std::isfinite(nrm)) throw NumericalError("amplitude integration became unstable (NaN)");
        tr.max_norm_drift = std::max(tr.max_norm_drift, std::abs(nrm - n0));
        if (tr.max_norm_drift > drift_limit)
            throw NumericalError(integrator == Integrator::euler
                                     ? "Euler norm drift above 1e-4: reduce dt or select rk4"
                                     : "RK4 norm drift above 1e-6: reduce dt");
        if ((k + 1) % std::max(1, sample_every) == 0 || k + 1 == steps) record(s);
    }
    tr.final_state = s;
    return tr;
}

struct SolverOptions {
    int grid_points = 256;
    double cutoff_scale = 1.0;
    WindowOptions window;
    double dt = 0.0;          // 0 selects 0.1 / omega_max
    Integrator integrator = Integrator::rk4;
    int samples = 400;        // recorded time samples, approximately
};

// Interaction window [t0 - W, t0 + W] for a Gaussian packet.
inline double solver_half_width(const DipoleCoupling& c, const GaussianQewSpec& q, const SolverOptions& o) {
    return interaction_half_width(c, q.sigma_et, o.window);
}

inline MomentumGrid solver_grid(const DipoleCoupling& c, const GaussianQewSpec& q, const SolverOptions& o) {
    return build_grid(c.kin, q.sigma_p0, recoil_momentum(c.tls.energy_gap, c.kin.v0), o.grid_points, o.cutoff_scale);
}

// Box length must hold the packet's path across the window.
inline void check_box(const MomentumGrid& grid, const ElectronKinematics& kin, double half_width) {
    const double need = 2.0 * kin.v0 * half_width;
    if (grid.box_length() < need) {
        const int suggest = 2 * int(std::ceil(grid.size * need / grid.box_length() / 2.0));
        throw NumericalError("momentum grid too coarse for the interaction window: box " +
                             std::to_string(grid.box_length()) + " nm < " + std::to_string(need) +
                             " nm; use at least N = " + std::to_string(suggest));
    }
}

inline MomentumTrajectory run_momentum_solver(const DipoleCoupling& c, const GaussianQewSpec& q, const TlsState& s,
                                              const SolverOptions& o = {}) {
    const MomentumGrid grid = solver_grid(c, q, o);
    const double W = solver_half_width(c, q, o);
    check_box(grid, c.kin, W);
    const MomentumPropagator prop(grid, c);
    const double dt = o.dt > 0.0 ? o.dt : 0.1 / prop.max_frequency();
    const int steps = static_cast<int>(std::ceil(2.0 * W / dt));
    const EntangledAmplitudes a0 = product_state(gaussian_momentum_amplitudes(q, grid), s, q.t0 - W);
    return integrate(a0, prop, q.t0 + W, dt, o.integrator, std::max(1, steps / std::max(1, o.samples)));
}

}  // namespace feberi
