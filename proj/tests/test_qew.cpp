#include <gtest/gtest.h>

#include <numeric>

#include "feberi/momentum_grid.hpp"
#include "feberi/qew.hpp"
#include "oracles.hpp"

using namespace feberi;

namespace {

const ElectronKinematics kin = kinematics_from_kinetic_energy(200e3);

ModulatedQewSpec fig7_like(double abs_g = 2.0, double photon_ev = 1.55) {
    const double wb = photon_ev / constants::hbar;
    return make_modulated(gaussian_from_duration(kin, 30.0, 0.0), cplx(abs_g, 0.0), wb, 0.0,
                          optimal_drift_time(kin, abs_g, wb));
}

}  // namespace

TEST(MomentumGrid, RejectsBadSizes) {
    EXPECT_THROW(build_grid(kin, 0.01, -0.01, 17), DomainError);
    EXPECT_THROW(build_grid(kin, 0.01, -0.01, 62), DomainError);
    EXPECT_NO_THROW(build_grid(kin, 0.01, -0.01, 64));
}

TEST(MomentumGrid, LayoutAndBox) {
    const MomentumGrid g = build_grid(kin, 0.002, -0.0096, 256);
    EXPECT_DOUBLE_EQ(g.point(g.size / 2), kin.p0);
    EXPECT_NEAR(g.point(0), kin.p0 - g.p_cutoff, 1e-12);
    EXPECT_NEAR(g.spacing * g.size, 2.0 * g.p_cutoff, 1e-12);
    EXPECT_NEAR(g.box_length() * g.spacing, two_pi * constants::hbar, 1e-12);
    EXPECT_NEAR(g.p_cutoff, std::max(8 * 0.002, 6 * 0.0096), 1e-15);
    EXPECT_LT(g.tail_mass, 1e-8);
}

TEST(MomentumGrid, TooNarrowCutoffFails) {
    EXPECT_THROW(grid_with_cutoff(kin.p0, 3.0, 128, 1.0), NumericalError);
}

TEST(GaussianQew, DurationAndMomentumSpreadAreConjugate) {
    const GaussianQewSpec q = gaussian_from_duration(kin, 0.2, 1.0);
    EXPECT_NEAR(q.sigma_z0, 0.2 * kin.v0, 1e-12);
    EXPECT_NEAR(q.sigma_p0 * q.sigma_z0, constants::hbar / 2, 1e-12);
    const GaussianQewSpec r = gaussian_from_momentum_spread(kin, q.sigma_p0, 1.0);
    EXPECT_NEAR(r.sigma_et, 0.2, 1e-12);
    EXPECT_THROW(gaussian_from_duration(kin, 0.0, 0.0), DomainError);
}

TEST(GaussianQew, AmplitudesNormalizedAndCentred) {
    const GaussianQewSpec q = gaussian_from_duration(kin, 0.3, 2.0);
    const MomentumGrid g = build_grid(kin, q.sigma_p0, recoil_momentum(2.0, kin.v0), 256);
    const Eigen::VectorXcd c = gaussian_momentum_amplitudes(q, g);
    EXPECT_NEAR(c.squaredNorm() * g.spacing, 1.0, 1e-12);
    double mean = 0.0, var = 0.0;
    for (int n = 0; n < g.size; ++n) mean += std::norm(c[n]) * g.point(n) * g.spacing;
    for (int n = 0; n < g.size; ++n) var += std::norm(c[n]) * std::pow(g.point(n) - mean, 2) * g.spacing;
    EXPECT_NEAR(mean, kin.p0, 1e-9 * kin.p0);
    EXPECT_NEAR(std::sqrt(var) / q.sigma_p0, 1.0, 1e-6);
}

TEST(GaussianQew, DensityNormalizedAndMoving) {
    const GaussianQewSpec q = gaussian_from_duration(kin, 0.5, 1.0);
    std::vector<double> z(4001);
    const double dz = 12.0 * q.sigma_z0 / 4000;
    for (int i = 0; i < 4001; ++i) z[i] = kin.v0 * 0.5 - 6.0 * q.sigma_z0 + i * dz;
    const std::vector<double> d = density_profile(q, 1.5, z);
    double total = 0.0, mean = 0.0;
    for (int i = 0; i < 4001; ++i) {
        total += d[i] * dz;
        mean += d[i] * z[i] * dz;
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
    EXPECT_NEAR(mean / total, kin.v0 * 0.5, 1e-6);
}

TEST(ModulatedQew, RequiresEnvelopeLongerThanPeriod) {
    const double wb = 1.0 / constants::hbar;
    EXPECT_THROW(make_modulated(gaussian_from_duration(kin, 2.0, 0.0), cplx(1.0, 0.0), wb, 0.0, 0.0), DomainError);
    EXPECT_THROW(make_modulated(gaussian_from_duration(kin, 10.0, 0.0), cplx(1.0, 0.0), wb, 0.0, -1.0), DomainError);
}

TEST(ModulatedQew, OptimalDriftGivesUnitBunching) {
    for (double g : {0.5, 1.0, 2.0, 3.5}) {
        const ModulatedQewSpec m = fig7_like(g);
        EXPECT_NEAR(4.0 * g * m.drift_curvature(), 1.0, 1e-12);
    }
}

TEST(ModulatedQew, SidebandProbabilitiesSumToOne) {
    const ModulatedQewSpec m = fig7_like(2.5);
    const int nmax = sideband_cutoff(2.5);
    double s = 0.0;
    for (int n = -nmax; n <= nmax; ++n) s += std::norm(sideband_weight(m, n));
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_LT(std::abs(bessel_j(nmax, 5.0)), 1e-8);
}

TEST(ModulatedQew, MomentumAmplitudesNormalized) {
    const ModulatedQewSpec m = fig7_like(1.0);
    const MomentumGrid g = grid_with_cutoff(kin.p0, 12 * m.delta_p, 2048, m.base.sigma_p0);
    const Eigen::VectorXcd c = modulated_momentum_amplitudes(m, g);
    EXPECT_NEAR(c.squaredNorm() * g.spacing, 1.0, 1e-9);
}

TEST(ModulatedQew, ZeroCouplingReducesToGaussian) {
    const double wb = 1.0 / constants::hbar;
    const ModulatedQewSpec m = make_modulated(gaussian_from_duration(kin, 10.0, 0.0), cplx(0.0, 0.0), wb, 0.0, 100.0);
    std::vector<double> z{-500.0, -100.0, 0.0, 40.0, 700.0};
    const auto a = density_profile(m, 0.0, z);
    const auto b = density_profile(m.base, 0.0, z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * b[2]);
    const ModulationSpectrum s = modulation_fourier_coefficients(m);
    EXPECT_NEAR(std::abs(s.f(1)), 0.0, 1e-14);
    EXPECT_DOUBLE_EQ(bunch_fwhm(s), s.period());
}

TEST(ModulationSpectrum, MatchesClosedFormAndAutocorrelation) {
    for (double g : {0.5, 1.0, 2.0}) {
        const ModulatedQewSpec m = fig7_like(g);
        const ModulationSpectrum s = modulation_fourier_coefficients(m);
        const int nmax = sideband_cutoff(g);
        const auto brute = oracle::bunching_coefficients(m, s.M, nmax);
        const double eps = m.drift_curvature();
        EXPECT_DOUBLE_EQ(s.f(0).real(), 1.0);
        for (int k = -s.M; k <= s.M; ++k) {
            EXPECT_NEAR(std::abs(s.f(k) - brute[k + s.M]), 0.0, 1e-10) << "g " << g << " m " << k;
            // closed form sums all sidebands; the truncated sum differs at the cutoff level
            EXPECT_NEAR(std::abs(s.f(k)), std::abs(bessel_j(k, 4.0 * g * std::sin(k * eps))), 1e-8);
            EXPECT_NEAR(std::abs(s.f(-k) - std::conj(s.f(k))), 0.0, 1e-14);
        }
    }
}

TEST(ModulationSpectrum, ReconstructionNonNegative) {
    const ModulationSpectrum s = modulation_fourier_coefficients(fig7_like(3.0));
    for (int k = 0; k < 2000; ++k) EXPECT_GE(s.value(s.period() * k / 2000), -1e-9);
}

TEST(ModulationSpectrum, FrozenFirstHarmonic) {
    const ModulationSpectrum s = modulation_fourier_coefficients(fig7_like());
    EXPECT_NEAR(std::abs(s.f(1)), 0.439203409645, 1e-9);
    EXPECT_NEAR(std::abs(s.f(2)), 0.348160409935, 1e-9);
}

TEST(ModulationSpectrum, BunchIsNarrowerThanPeriod) {
    const ModulationSpectrum s = modulation_fourier_coefficients(fig7_like());
    const double w = bunch_fwhm(s);
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, 0.2 * s.period());
}

TEST(ModulationSpectrum, ModulatedDensityAveragesToEnvelope) {
    // Over one period near the centre the modulated density has the envelope's mean.
    const ModulatedQewSpec m = fig7_like(1.0);
    const double lam = kin.v0 * m.period();
    const int n = 4000;
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = lam * i / n;
    const auto d = density_profile(m, 0.0, z);
    const auto e = density_profile(m.base, 0.0, z);
    const double md = std::accumulate(d.begin(), d.end(), 0.0) / n;
    const double me = std::accumulate(e.begin(), e.end(), 0.0) / n;
    EXPECT_NEAR(md / me, 1.0, 2e-2);
}

TEST(Bessel, IntegerOrderSigns) {
    EXPECT_NEAR(bessel_j(-1, 1.0), -std::cyl_bessel_j(1.0, 1.0), 1e-15);
    EXPECT_NEAR(bessel_j(-2, 1.0), std::cyl_bessel_j(2.0, 1.0), 1e-15);
    EXPECT_NEAR(bessel_j(3, -1.0), -std::cyl_bessel_j(3.0, 1.0), 1e-15);
}
