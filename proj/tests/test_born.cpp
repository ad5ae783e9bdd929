#include <gtest/gtest.h>

#include "feberi/analytic.hpp"
#include "feberi/born.hpp"
#include "oracles.hpp"

using namespace feberi;

namespace {

const ElectronKinematics kin = kinematics_from_kinetic_energy(200e3);

DipoleCoupling coupling(Orientation o = Orientation::transverse) {
    return make_coupling(make_tls(2.0, 5.0, o), 2.4, kin);
}

InteractionProfile profile(const DipoleCoupling& c, double sigma) {
    return interaction_profile(c, sigma, profile_grid(c, sigma));
}

}  // namespace

TEST(Profile, GridIsSymmetricAndFine) {
    const auto c = coupling();
    const TimeGrid g = profile_grid(c, 0.3);
    EXPECT_EQ(g.count % 2, 1);
    EXPECT_NEAR(g.at(g.count / 2), 0.0, 1e-12);
    EXPECT_LE(g.end(), -g.start + 1e-12);
    EXPECT_GE(g.end(), interaction_half_width(c, 0.3) - 1e-12);
}

TEST(Profile, IntegralEqualsZeroMomentumTransformUpToReportedTruncation) {
    const auto ct = coupling();
    const double full = m_tilde(0.0, ct).real() / kin.v0;
    const double cut = profile(ct, 0.0).integral() / full;
    EXPECT_NEAR(cut, 1.0 - window_truncation(ct, 0.0), 1e-6);
    EXPECT_GT(window_truncation(ct, 0.0), 1e-3);
    WindowOptions wide;
    wide.transit_multiple = 400.0;
    for (double sigma : {0.0, 0.05, 0.5}) {
        const double v = interaction_profile(ct, sigma, profile_grid(ct, sigma, wide)).integral();
        EXPECT_NEAR(v / full, 1.0, 1e-5) << sigma;
        const auto cp = coupling(Orientation::parallel);
        EXPECT_NEAR(profile(cp, sigma).integral(), 0.0, 1e-9);
    }
}

TEST(Profile, SpectralWeightMatchesMomentumPicture) {
    const auto c = coupling();
    WindowOptions wide;
    wide.transit_multiple = 400.0;
    const InteractionProfile p = interaction_profile(c, 0.0, profile_grid(c, 0.0, wide));
    const double s = oracle::spectral_weight(p.values, p.grid.start, p.grid.step, c.tls.omega_21);
    EXPECT_NEAR(s / (constants::hbar * constants::hbar) / p2_from_ground(c).value, 1.0, 1e-4);
}

TEST(Profile, RejectsCoarseOrShortGrids) {
    const auto c = coupling();
    TimeGrid g = profile_grid(c, 0.1);
    TimeGrid coarse{g.start, c.geometry.transit_time, 2 * int(-g.start / c.geometry.transit_time) + 1};
    EXPECT_THROW(interaction_profile(c, 0.1, coarse), NumericalError);
    TimeGrid shortg{-c.geometry.transit_time, g.step, int(2 * c.geometry.transit_time / g.step) + 1};
    EXPECT_THROW(interaction_profile(c, 0.1, shortg), NumericalError);
    EXPECT_THROW(interaction_profile(c, -1.0, g), DomainError);
}

TEST(Evolution, NormConserved) {
    const auto c = coupling();
    const TlsTrajectory tr = evolve_tls(TlsState::equal_superposition(0.4), profile(c, 0.2), c.tls.omega_21, 1.3);
    EXPECT_LT(tr.max_norm_drift, 1e-8);
    for (const auto& s : tr.states) EXPECT_NEAR(s.norm(), 1.0, 1e-8);
}

TEST(Evolution, GroundStartMatchesAnalyticDecay) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    for (double G : {0.05, 0.5, 1.0, 1.5}) {
        const double p2 = evolve_tls(TlsState::ground(), profile(c, G / w), w, 0.0, 1 << 30).final_state().p2();
        EXPECT_NEAR(p2 / dp2_born(c, G / w).value, 1.0, 2e-3) << "Gamma " << G;
    }
}

TEST(Evolution, FirstOrderMatchesAnalytic) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    const TlsState s = TlsState::equal_superposition(pi / 2);
    for (double G : {0.1, 0.8}) {
        const double t0 = pi / w;
        const double got = evolve_tls(s, profile(c, G / w), w, t0, 1 << 30).final_state().p2() - s.p2();
        const TransitionIncrement ref = increments(c, s, t0, G / w, IncrementModel::born);
        EXPECT_NEAR(got / ref.dp1, 1.0, 2e-3) << "Gamma " << G;
    }
}

TEST(Evolution, RejectsUnnormalizedState) {
    const auto c = coupling();
    EXPECT_THROW(evolve_tls(TlsState{cplx(1, 0), cplx(1, 0)}, profile(c, 0.0), c.tls.omega_21, 0.0), DomainError);
}

TEST(PassageMap, UnitaryAndEqualToDirectEvolution) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    const InteractionProfile p = profile(c, 0.1);
    const Eigen::Matrix2cd U = passage_matrix(p, w);
    EXPECT_LT((U.adjoint() * U - Eigen::Matrix2cd::Identity()).norm(), 1e-9);
    const TlsState s0 = TlsState::normalized({0.6, 0.1}, {0.3, -0.7});
    for (double tK : {0.0, 0.37, 5.2, 123.4}) {
        const TlsState a = apply_passage(U, w, tK, s0);
        const TlsState b = evolve_tls(s0, p, w, tK, 1 << 30).final_state();
        EXPECT_NEAR(std::abs(a.c1 - b.c1), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(a.c2 - b.c2), 0.0, 1e-10);
    }
}

TEST(Schedule, DeterministicBySeed) {
    const double wb = 1.0 / constants::hbar;
    for (ScheduleKind k : {ScheduleKind::random, ScheduleKind::correlated}) {
        const auto a = arrival_schedule(k, 30, wb, 0.2, 50.0, 99);
        const auto b = arrival_schedule(k, 30, wb, 0.2, 50.0, 99);
        const auto d = arrival_schedule(k, 30, wb, 0.2, 50.0, 100);
        EXPECT_EQ(a.times, b.times);
        EXPECT_NE(a.times, d.times);
        for (std::size_t i = 1; i < a.times.size(); ++i) EXPECT_GT(a.times[i], a.times[i - 1]);
    }
}

TEST(Schedule, CombLockedTimesShareThePhase) {
    const double wb = 1.0 / constants::hbar;
    const double Tb = two_pi / wb;
    const auto s = arrival_schedule(ScheduleKind::correlated, 25, wb, 0.3, 40.0, 5);
    for (double t : s.times) EXPECT_NEAR(std::remainder(t - 0.3, Tb), 0.0, 1e-9);
    const auto p = arrival_schedule(ScheduleKind::periodic, 4, wb, 0.0, 0.0, 0);
    EXPECT_NEAR(p.times[3], 4 * Tb, 1e-12);
    EXPECT_THROW(arrival_schedule(ScheduleKind::random, 0, wb, 0.0, 1.0, 0), DomainError);
    EXPECT_THROW(arrival_schedule(ScheduleKind::correlated, 3, 0.0, 0.0, 1.0, 0), DomainError);
}

TEST(Train, OverlapWarning) {
    const auto c = coupling();
    ArrivalSchedule s;
    s.times = {0.0, 0.01};
    const TrainResult r = simulate_train(TlsState::ground(), s, c, 0.0);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("overlap"), std::string::npos);
}

TEST(Train, PhaseLockedBuildupIsQuadratic) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    const auto sched = arrival_schedule(ScheduleKind::correlated, 20, w / 2.0, 0.0, 50.0, 3);
    const TrainResult r = simulate_train(TlsState::ground(), sched, c, 0.02);
    for (int n = 1; n <= 20; ++n) EXPECT_NEAR(r.p2[n - 1] / (double(n * n) * r.p2[0]), 1.0, 1e-3) << n;
}

TEST(Train, RandomArrivalsBuildUpLinearlyOnAverage) {
    const auto c = coupling();
    const double w = c.tls.omega_21;
    const InteractionProfile p = profile(c, 0.02);
    const int N = 20, seeds = 400;
    double mean = 0.0;
    for (int s = 0; s < seeds; ++s)
        mean += simulate_train(TlsState::ground(), arrival_schedule(ScheduleKind::random, N, 0.0, 0.0, 50.0, s), p, w)
                    .p2.back();
    mean /= seeds;
    const double one = dp2_born(c, 0.02).value;
    EXPECT_NEAR(mean / (N * one), 1.0, 0.25);
}
