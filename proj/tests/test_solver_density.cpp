#include <gtest/gtest.h>

#include <filesystem>

#include "feberi/analytic.hpp"
#include "feberi/born.hpp"
#include "feberi/output.hpp"
#include "feberi/solver_density.hpp"

using namespace feberi;

namespace {

const ElectronKinematics kin = kinematics_from_kinetic_energy(200e3);

DipoleCoupling coupling() { return make_coupling(make_tls(2.0, 5.0, Orientation::transverse), 2.4, kin); }

GaussianQewSpec packet(const DipoleCoupling& c, double sigma_et, double t0 = 0.0) {
    return gaussian_from_duration(kin, sigma_et, t0);
}

SolverOptions few_samples() {
    SolverOptions o;
    o.samples = 8;
    return o;
}

}  // namespace

TEST(Hamiltonian, HermitianAndKernelResolved) {
    const auto c = coupling();
    const auto q = packet(c, 0.2);
    const HamiltonianAssembly h = assemble_hamiltonian(solver_grid(c, q, {}), c);
    EXPECT_LT((h.h_total - h.h_total.adjoint()).norm(), 1e-12 * h.h_total.norm());
    EXPECT_LT(h.kernel_tail, 1e-2);
    EXPECT_GE(h.z_points, 32 * 256);
}

TEST(Hamiltonian, InteractionMatchesContinuumTransform) {
    const auto c = coupling();
    const MomentumGrid g = solver_grid(c, packet(c, 0.2), {});
    const HamiltonianAssembly h = assemble_hamiltonian(g, c);
    // <p_m| f |p_n> = Mhat(p_m - p_n) / L, with the dipole strength factored out
    for (int d : {0, 1, 5, 20}) {
        const cplx ref = m_tilde(d * g.spacing, c) / c.tls.dipole / g.box_length();
        EXPECT_NEAR(std::abs(h.h_ip(d, 0) - ref), 0.0, 2e-2 * std::abs(m_tilde(0.0, c) / c.tls.dipole / g.box_length()))
            << d;
    }
}

TEST(JointDensity, TracePurityHermiticityAndPositivity) {
    const auto c = coupling();
    const auto q = packet(c, 0.1);
    const MomentumGrid g = build_grid(kin, q.sigma_p0, recoil_momentum(2.0, kin.v0), 64);
    const HamiltonianAssembly h = assemble_hamiltonian(g, c);
    Eigen::VectorXcd free = gaussian_momentum_amplitudes(q, g) * std::sqrt(g.spacing);
    Eigen::Matrix2cd rb;
    rb << 0.7, cplx(0.2, 0.3), cplx(0.2, -0.3), 0.3;
    const JointDensityMatrix r0 = product_density(free, rb, g);
    EXPECT_NEAR(r0.trace(), 1.0, 1e-9);
    const DensityPropagator prop(h);
    for (double t : {0.0, 0.05, 0.4}) {
        const JointDensityMatrix r = evolve(r0, prop, t);
        EXPECT_NEAR(r.trace(), r0.trace(), 1e-9);
        EXPECT_NEAR(r.purity(), r0.purity(), 1e-9);
        EXPECT_LT((r.rho - r.rho.adjoint()).norm(), 1e-9);
        const Eigen::Matrix2cd b = partial_trace_bound(r);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(b);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
        EXPECT_NEAR(b.trace().real(), 1.0, 1e-9);
        EXPECT_NEAR(partial_trace_free(r).trace().real(), 1.0, 1e-9);
    }
    EXPECT_THROW(evolve(r0, prop, -1.0), DomainError);
}

TEST(DensitySolver, GroundStartIsSizeIndependent) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    const double ref = p2_from_ground(c).value;
    for (double G : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        const DensityRun run = run_density_solver(c, packet(c, G / w), TlsState::ground(), few_samples());
        EXPECT_NEAR(run.trajectory.p2.back() / ref, 1.0, 3e-2) << "Gamma " << G;
        for (double tr : run.trajectory.trace) EXPECT_NEAR(tr, 1.0, 1e-9);
        for (double pu : run.trajectory.purity) EXPECT_NEAR(pu, 1.0, 1e-9);
    }
}

TEST(DensitySolver, EnergyBalance) {
    const auto c = coupling();
    const DensityRun run = run_density_solver(c, packet(c, 0.2), TlsState::ground(), few_samples());
    const EnergyIncrements inc = energy_accounting(run.trajectory);
    const double gain = c.tls.energy_gap * run.trajectory.p2.back();
    for (double e : inc.total) EXPECT_NEAR(e, 0.0, 1e-9);
    EXPECT_NEAR(inc.free.back() + inc.bound.back(), 0.0, 2e-2 * gain);
    EXPECT_NEAR(inc.bound.back(), gain, 1e-12);
}

TEST(DensitySolver, EntangledBoundStateIsMixed) {
    const auto c = coupling();
    const DensityRun run = run_density_solver(c, packet(c, 0.2), TlsState::equal_superposition(0.0), few_samples());
    const Eigen::Matrix2cd& rb = run.trajectory.rho_b.back();
    EXPECT_LT((rb * rb).trace().real(), 1.0);
    EXPECT_GT(run.trajectory.entropy.back(), 0.0);
    EXPECT_NEAR(run.trajectory.entropy.front(), 0.0, 1e-9);
}

TEST(Sequential, SingleElectronEqualsDirectRun) {
    const auto c = coupling();
    const auto q = packet(c, 0.2);
    Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
    g(0, 0) = 1.0;
    const SequentialResult s = sequential_multi_qew(g, c, q, {0.0});
    const DensityRun run = run_density_solver(c, q, TlsState::ground(), few_samples());
    EXPECT_NEAR(s.p2[0] / run.trajectory.p2.back(), 1.0, 1e-8);
}

TEST(Sequential, SuperpositionMatchesDirectRunAtArrival) {
    const auto c = coupling();
    const double t0 = 0.7;
    const TlsState st = TlsState::equal_superposition(0.4);
    Eigen::Matrix2cd rho;
    rho << st.p1(), st.c1 * std::conj(st.c2), st.c2 * std::conj(st.c1), st.p2();
    const SequentialResult s = sequential_multi_qew(rho, c, packet(c, 0.2), {t0});
    const DensityRun run = run_density_solver(c, packet(c, 0.2, t0), st, few_samples());
    EXPECT_NEAR(s.p2[0], run.trajectory.p2.back(), 1e-10);
}

TEST(Sequential, AgreesWithTimeDomainTrainAtSmallSize) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    const double sigma = 0.02 * c.tls.period();
    const auto sched = arrival_schedule(ScheduleKind::correlated, 8, w / 2.0, 0.0, 60.0, 4);
    Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
    g(0, 0) = 1.0;
    const SequentialResult a = sequential_multi_qew(g, c, packet(c, sigma), sched.times);
    const TrainResult b = simulate_train(TlsState::ground(), sched, c, sigma);
    for (std::size_t k = 0; k < a.p2.size(); ++k) EXPECT_NEAR(a.p2[k] / b.p2[k], 1.0, 0.1) << k;
}

TEST(Sequential, OverlappingWindowsThrow) {
    const auto c = coupling();
    EXPECT_THROW(sequential_multi_qew(Eigen::Matrix2cd::Identity() * 0.5, c, packet(c, 0.2), {0.0, 0.1}),
                 DomainError);
}

TEST(RhoDump, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "feberi_rho_test";
    std::filesystem::create_directories(dir);
    std::vector<Eigen::Matrix2cd> rho(3);
    for (int k = 0; k < 3; ++k) rho[k] << 0.1 * k, cplx(0.2, -0.1 * k), cplx(0.2, 0.1 * k), 1.0 - 0.1 * k;
    write_rho_b(dir / "rho_b.bin", 256, 0.0125, rho);
    EXPECT_EQ(std::filesystem::file_size(dir / "rho_b.bin"), 24u + 3u * 64u);
    const RhoDump d = read_rho_b(dir / "rho_b.bin");
    EXPECT_EQ(d.grid_points, 256u);
    EXPECT_EQ(d.dt, 0.0125);
    ASSERT_EQ(d.rho.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(d.rho[k], rho[k]);
    std::filesystem::remove_all(dir);
}
