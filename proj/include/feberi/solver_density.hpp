#pragma once
// Joint free-electron x TLS evolution under the time-independent Hamiltonian
// H = H0F + H0B + H_IP (x) H_IB, propagated through one Hermitian eigendecomposition.
// Basis index 2n + j: momentum p_n, level j (0 -> |1>, 1 -> |2>).

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "feberi/core.hpp"
#include "feberi/coulomb.hpp"
#include "feberi/momentum_grid.hpp"
#include "feberi/qew.hpp"
#include "feberi/solver_momentum.hpp"

namespace feberi {

struct HamiltonianAssembly {
    Eigen::VectorXd h0_free;   // E_pn minus the beam total energy
    Eigen::Vector2d h0_bound;  // {0, E21}
    Eigen::MatrixXcd h_ip;     // <p_m| f(z) |p_n>, eV / (e nm)
    Eigen::Matrix2d h_ib;      // dipole matrix, e nm
    Eigen::MatrixXcd h_total;
    int z_points = 0;
    double z_step = 0.0;
    double kernel_tail = 0.0;  // kernel weight outside the box, relative
};

struct AssemblyOptions {
    int oversample = 32;               // z samples per momentum point, at least
    double samples_per_length = 16.0;  // z samples per r_perp / gamma, at least
    double max_kernel_tail = 1e-2;
};

namespace detail {

// Integral of |kernel_shape| over the real line.
inline double kernel_abs_integral(const DipoleCoupling& c) {
    const double r = c.geometry.r_perp;
    return c.orientation() == Orientation::parallel ? 2.0 / (c.kin.gamma * r) : 2.0 / r;
}

inline int next_pow2(long n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace detail

inline HamiltonianAssembly assemble_hamiltonian(const MomentumGrid& grid, const DipoleCoupling& c,
                                                const AssemblyOptions& o = {}) {
    const int N = grid.size;
    const double L = grid.box_length();
    const double a = c.contracted_length();
    const long want = std::max<long>(long(o.oversample) * N, long(std::ceil(L / a * o.samples_per_length)));
    const int Nz = detail::next_pow2(want);
    const double dz = L / Nz;

    // f(z) = e^2/(4 pi eps0) kernel_shape(z), sampled at z_l = (l - Nz/2) dz.
    std::vector<cplx> f(Nz);
    double abs_sum = 0.0;
    for (int l = 0; l < Nz; ++l) {
        const double v = constants::coulomb * kernel_shape((l - Nz / 2) * dz, c);
        f[l] = v;
        abs_sum += std::abs(v) * dz;
    }
    HamiltonianAssembly h;
    h.z_points = Nz;
    h.z_step = dz;
    h.kernel_tail = std::max(0.0, 1.0 - abs_sum / (constants::coulomb * detail::kernel_abs_integral(c)));
    if (h.kernel_tail > o.max_kernel_tail)
        throw NumericalError("z box too short for the kernel: tail fraction " + std::to_string(h.kernel_tail) +
                             "; raise the grid size");

    // Mhat(d dp) = dz sum_l f_l exp(-2 pi i d (l - Nz/2) / Nz) = dz (-1)^d DFT(f)[d]
    Eigen::FFT<double> fft;
    std::vector<cplx> F;
    fft.fwd(F, f);
    auto mhat = [&](int d) {
        const cplx v = F[((d % Nz) + Nz) % Nz] * dz;
        return (d % 2 == 0) ? v : -v;
    };
    h.h_ip.resize(N, N);
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n) h.h_ip(m, n) = mhat(m - n) / L;
    h.h_ip = 0.5 * (h.h_ip + h.h_ip.adjoint()).eval();

    h.h0_free = detail::free_energies(grid, c.kin);
    h.h0_bound << 0.0, c.tls.energy_gap;
    h.h_ib << 0.0, c.tls.dipole, c.tls.dipole, 0.0;

    h.h_total = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
    for (int m = 0; m < N; ++m) {
        for (int j = 0; j < 2; ++j) h.h_total(2 * m + j, 2 * m + j) = h.h0_free[m] + h.h0_bound[j];
        for (int n = 0; n < N; ++n)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    if (h.h_ib(j, k) != 0.0) h.h_total(2 * m + j, 2 * n + k) += h.h_ip(m, n) * h.h_ib(j, k);
    }
    return h;
}

struct JointDensityMatrix {
    Eigen::MatrixXcd rho;
    MomentumGrid grid;

    double trace() const { return rho.trace().real(); }
    double purity() const { return (rho * rho).trace().real(); }
};

// Box-normalized joint vector of a product state, sum |psi|^2 = 1.
inline Eigen::VectorXcd product_vector(const Eigen::VectorXcd& free_box, const cplx c1, const cplx c2) {
    const int N = int(free_box.size());
    Eigen::VectorXcd psi(2 * N);
    for (int n = 0; n < N; ++n) {
        psi[2 * n] = c1 * free_box[n];
        psi[2 * n + 1] = c2 * free_box[n];
    }
    return psi;
}

inline JointDensityMatrix product_density(const Eigen::VectorXcd& free_box, const Eigen::Matrix2cd& rho_b,
                                          const MomentumGrid& grid) {
    const int N = int(free_box.size());
    const Eigen::MatrixXcd rf = free_box * free_box.adjoint();
    JointDensityMatrix out{Eigen::MatrixXcd(2 * N, 2 * N), grid};
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) out.rho(2 * m + j, 2 * n + k) = rf(m, n) * rho_b(j, k);
    return out;
}

class DensityPropagator {
public:
    explicit DensityPropagator(const HamiltonianAssembly& h) : solver_(h.h_total) {
        if (solver_.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
    }
    Eigen::VectorXcd evolve_state(const Eigen::VectorXcd& psi0, double t) const {
        return evolve_coefficients(solver_.eigenvectors().adjoint() * psi0, t);
    }
    // psi(t) from precomputed eigenbasis coefficients V^dagger psi0.
    Eigen::VectorXcd evolve_coefficients(const Eigen::VectorXcd& coeff, double t) const {
        const Eigen::VectorXd& lam = solver_.eigenvalues();
        Eigen::VectorXcd ph(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) ph[i] = std::polar(1.0, -lam[i] * t / constants::hbar);
        return solver_.eigenvectors() * ph.cwiseProduct(coeff);
    }
    Eigen::MatrixXcd evolution_operator(double t) const {
        const Eigen::VectorXd& lam = solver_.eigenvalues();
        Eigen::VectorXcd ph(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) ph[i] = std::polar(1.0, -lam[i] * t / constants::hbar);
        return solver_.eigenvectors() * ph.asDiagonal() * solver_.eigenvectors().adjoint();
    }
    Eigen::VectorXcd coefficients(const Eigen::VectorXcd& psi0) const {
        return solver_.eigenvectors().adjoint() * psi0;
    }
    const Eigen::VectorXd& eigenvalues() const { return solver_.eigenvalues(); }

private:
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver_;
};

inline JointDensityMatrix evolve(const JointDensityMatrix& rho0, const DensityPropagator& prop, double t) {
    if (!(t >= 0.0)) throw DomainError("evolution time must be non-negative");
    const Eigen::MatrixXcd U = prop.evolution_operator(t);
    return {U * rho0.rho * U.adjoint(), rho0.grid};
}

inline JointDensityMatrix evolve(const JointDensityMatrix& rho0, const HamiltonianAssembly& h, double t) {
    return evolve(rho0, DensityPropagator(h), t);
}

inline Eigen::Matrix2cd partial_trace_bound(const Eigen::MatrixXcd& rho) {
    const Eigen::Index N = rho.rows() / 2;
    Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
    for (Eigen::Index n = 0; n < N; ++n)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) out(j, k) += rho(2 * n + j, 2 * n + k);
    return out;
}

inline Eigen::MatrixXcd partial_trace_free(const Eigen::MatrixXcd& rho) {
    const Eigen::Index N = rho.rows() / 2;
    Eigen::MatrixXcd out(N, N);
    for (Eigen::Index m = 0; m < N; ++m)
        for (Eigen::Index n = 0; n < N; ++n) out(m, n) = rho(2 * m, 2 * n) + rho(2 * m + 1, 2 * n + 1);
    return out;
}

inline Eigen::Matrix2cd partial_trace_bound(const JointDensityMatrix& r) { return partial_trace_bound(r.rho); }
inline Eigen::MatrixXcd partial_trace_free(const JointDensityMatrix& r) { return partial_trace_free(r.rho); }

inline Eigen::Matrix2cd bound_density_from_vector(const Eigen::VectorXcd& psi) {
    const Eigen::Index N = psi.size() / 2;
    Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
    for (Eigen::Index n = 0; n < N; ++n)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) out(j, k) += psi[2 * n + j] * std::conj(psi[2 * n + k]);
    return out;
}

// Entropy in nats.
inline double von_neumann_entropy(const Eigen::Matrix2cd& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
    double s = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double l = es.eigenvalues()[i];
        if (l > 1e-300) s -= l * std::log(l);
    }
    return s;
}

struct EnergyExpectations {
    double free = 0.0;
    double bound = 0.0;
    double interaction = 0.0;
    double total() const { return free + bound + interaction; }
};

inline EnergyExpectations energy_expectations(const Eigen::VectorXcd& psi, const HamiltonianAssembly& h) {
    const Eigen::Index N = h.h0_free.size();
    EnergyExpectations e;
    Eigen::VectorXcd a(N), b(N);
    for (Eigen::Index n = 0; n < N; ++n) {
        a[n] = psi[2 * n];
        b[n] = psi[2 * n + 1];
        const double w = std::norm(a[n]) + std::norm(b[n]);
        e.free += h.h0_free[n] * w;
        e.bound += h.h0_bound[0] * std::norm(a[n]) + h.h0_bound[1] * std::norm(b[n]);
    }
    e.interaction = 2.0 * h.h_ib(0, 1) * std::real(a.dot(h.h_ip * b));
    return e;
}

struct DensityTrajectory {
    std::vector<double> t;  // absolute time, fs
    std::vector<double> p1, p2;
    std::vector<EnergyExpectations> energy;
    std::vector<double> trace, purity, entropy;
    std::vector<Eigen::Matrix2cd> rho_b;  // interaction picture
    Eigen::VectorXcd final_vector;
};

struct EnergyIncrements {
    std::vector<double> free, bound, interaction, total;
};

inline EnergyIncrements energy_accounting(const DensityTrajectory& tr) {
    EnergyIncrements out;
    if (tr.energy.empty()) return out;
    const EnergyExpectations& e0 = tr.energy.front();
    for (const auto& e : tr.energy) {
        out.free.push_back(e.free - e0.free);
        out.bound.push_back(e.bound - e0.bound);
        out.interaction.push_back(e.interaction - e0.interaction);
        out.total.push_back(e.total() - e0.total());
    }
    return out;
}

inline Eigen::Matrix2cd to_interaction_picture(const Eigen::Matrix2cd& rs, double gap, double t) {
    Eigen::Matrix2cd r = rs;
    const cplx ph = std::polar(1.0, -gap * t / constants::hbar);
    r(0, 1) *= ph;
    r(1, 0) *= std::conj(ph);
    return r;
}

// Box-normalized Schroedinger vector of the product state at time t_start.
inline Eigen::VectorXcd initial_vector(const Eigen::VectorXcd& free_amplitudes, const MomentumGrid& grid,
                                       const HamiltonianAssembly& h, const TlsState& s, double t_start) {
    const int N = grid.size;
    Eigen::VectorXcd psi(2 * N);
    const double sq = std::sqrt(grid.spacing);
    const cplx cj[2] = {s.c1, s.c2};
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < 2; ++j)
            psi[2 * n + j] = sq * free_amplitudes[n] * cj[j] *
                             std::polar(1.0, -(h.h0_free[n] + h.h0_bound[j]) * t_start / constants::hbar);
    return psi;
}

struct DensityRun {
    MomentumGrid grid;
    HamiltonianAssembly hamiltonian;
    DensityTrajectory trajectory;
    double t_begin = 0.0, t_end = 0.0;
};

inline DensityRun run_density_solver(const DipoleCoupling& c, const GaussianQewSpec& q, const TlsState& s,
                                     const SolverOptions& o = {}, const AssemblyOptions& ao = {}) {
    DensityRun run;
    run.grid = solver_grid(c, q, o);
    const double W = solver_half_width(c, q, o);
    check_box(run.grid, c.kin, W);
    run.hamiltonian = assemble_hamiltonian(run.grid, c, ao);
    const DensityPropagator prop(run.hamiltonian);
    run.t_begin = q.t0 - W;
    run.t_end = q.t0 + W;
    const Eigen::VectorXcd psi0 =
        initial_vector(gaussian_momentum_amplitudes(q, run.grid), run.grid, run.hamiltonian, s, run.t_begin);
    const Eigen::VectorXcd coeff = prop.coefficients(psi0);
    const int samples = std::max(2, o.samples);
    DensityTrajectory& tr = run.trajectory;
    for (int k = 0; k <= samples; ++k) {
        const double dt = 2.0 * W * k / samples;
        const Eigen::VectorXcd psi = k == 0 ? psi0 : prop.evolve_coefficients(coeff, dt);
        const double t = run.t_begin + dt;
        const Eigen::Matrix2cd rb = bound_density_from_vector(psi);
        const double nrm = psi.squaredNorm();
        tr.t.push_back(t);
        tr.p1.push_back(rb(0, 0).real());
        tr.p2.push_back(rb(1, 1).real());
        tr.energy.push_back(energy_expectations(psi, run.hamiltonian));
        tr.trace.push_back(nrm);
        tr.purity.push_back(nrm * nrm);
        tr.entropy.push_back(von_neumann_entropy(rb));
        tr.rho_b.push_back(to_interaction_picture(rb, c.tls.energy_gap, t));
        if (k == samples) tr.final_vector = psi;
    }
    return run;
}

struct SequentialResult {
    std::vector<double> p2;
    std::vector<Eigen::Matrix2cd> rho_b;  // interaction picture, after each electron
};

// Electrons with identical packets arrive at the given times; each meets a
// fresh free-electron state and is traced out after its window.
inline SequentialResult sequential_multi_qew(const Eigen::Matrix2cd& rho_b0, const DipoleCoupling& c,
                                             const GaussianQewSpec& shape, const std::vector<double>& arrivals,
                                             const SolverOptions& o = {}, const AssemblyOptions& ao = {}) {
    GaussianQewSpec local = shape;
    local.t0 = 0.0;
    const MomentumGrid grid = solver_grid(c, local, o);
    const double W = solver_half_width(c, local, o);
    for (std::size_t k = 1; k < arrivals.size(); ++k)
        if (arrivals[k] - arrivals[k - 1] < 2.0 * W)
            throw DomainError("interaction windows of consecutive electrons overlap");
    check_box(grid, c.kin, W);
    const HamiltonianAssembly h = assemble_hamiltonian(grid, c, ao);
    const DensityPropagator prop(h);
    const Eigen::VectorXcd free = gaussian_momentum_amplitudes(local, grid);

    // Images of |1> and |2> after one passage, read out in the interaction picture.
    Eigen::VectorXcd out[2];
    for (int j = 0; j < 2; ++j) {
        const TlsState basis = j == 0 ? TlsState::ground() : TlsState::excited();
        Eigen::VectorXcd psi = prop.evolve_state(initial_vector(free, grid, h, basis, -W), 2.0 * W);
        for (int n = 0; n < grid.size; ++n)
            for (int a = 0; a < 2; ++a) psi[2 * n + a] *= std::polar(1.0, h.h0_bound[a] * W / constants::hbar);
        out[j] = psi;
    }
    // G[j][k](a,b) = sum_n out_j(n,a) conj(out_k(n,b))
    Eigen::Matrix2cd G[2][2];
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            G[j][k].setZero();
            for (int n = 0; n < grid.size; ++n)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        G[j][k](a, b) += out[j][2 * n + a] * std::conj(out[k][2 * n + b]);
        }

    SequentialResult r;
    Eigen::Matrix2cd rho = rho_b0;
    for (double tk : arrivals) {
        const Eigen::Vector2cd d(1.0, std::polar(1.0, -c.tls.energy_gap * tk / constants::hbar));
        const Eigen::Matrix2cd local_rho = d.asDiagonal() * rho * d.conjugate().asDiagonal();
        Eigen::Matrix2cd next = Eigen::Matrix2cd::Zero();
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) next += local_rho(j, k) * G[j][k];
        rho = d.conjugate().asDiagonal() * next * d.asDiagonal();
        rho = 0.5 * (rho + rho.adjoint()).eval();
        r.p2.push_back(rho(1, 1).real());
        r.rho_b.push_back(rho);
    }
    return r;
}

}  // namespace feberi
