#include <gtest/gtest.h>

#include <random>

#include "feberi/coulomb.hpp"
#include "oracles.hpp"

using namespace feberi;

namespace {

DipoleCoupling table_coupling(Orientation o, MatrixElementConvention conv = MatrixElementConvention::exact) {
    return make_coupling(make_tls(2.0, 5.0, o), 2.4, kinematics_from_kinetic_energy(200e3), conv);
}

}  // namespace

TEST(MatrixElement, ResonantMagnitude) {
    const auto c = table_coupling(Orientation::transverse);
    const double p = recoil_momentum(2.0, c.kin.v0);
    EXPECT_NEAR(std::abs(m_tilde(p, c)), 0.124744, 1e-6);
}

TEST(MatrixElement, ClosedFormsMatchDirectTransform) {
    std::mt19937_64 rng(11);
    const auto cp = table_coupling(Orientation::parallel);
    const auto ct = table_coupling(Orientation::transverse);
    const double scale = constants::hbar * cp.kin.gamma / cp.geometry.r_perp;  // p where the K argument is 1
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    int checked = 0;
    for (int i = 0; i < 50; ++i) {
        double p = u(rng) * scale;
        if (std::abs(p) < 1e-3 * scale) p = 1e-3 * scale;
        for (const auto* c : {&cp, &ct}) {
            const cplx a = m_tilde(p, *c);
            const cplx b = oracle::matrix_element_transform(p, *c);
            EXPECT_LE(std::abs(a - b), 1e-5 * std::abs(b)) << to_string(c->orientation()) << " p = " << p;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 100);
}

TEST(MatrixElement, PrintedFormsDifferByKnownFactors) {
    const double p = 0.37;
    const auto ep = table_coupling(Orientation::parallel);
    const auto pp = table_coupling(Orientation::parallel, MatrixElementConvention::printed);
    EXPECT_NEAR(std::abs(m_tilde(p, ep)) / std::abs(m_tilde(p, pp)), 2.0, 1e-12);
    const auto et = table_coupling(Orientation::transverse);
    const auto pt = table_coupling(Orientation::transverse, MatrixElementConvention::printed);
    EXPECT_NEAR(std::abs(m_tilde(p, et)) / std::abs(m_tilde(p, pt)), 2.0 * et.kin.gamma * std::sqrt(two_pi), 1e-9);
    // Only the exact form agrees with quadrature.
    const cplx q = oracle::matrix_element_transform(p, et);
    EXPECT_GT(std::abs(m_tilde(p, pt) - q), 0.5 * std::abs(q));
}

TEST(MatrixElement, ZeroMomentumLimits) {
    const auto cp = table_coupling(Orientation::parallel);
    const auto ct = table_coupling(Orientation::transverse);
    EXPECT_EQ(std::abs(m_tilde(0.0, cp)), 0.0);
    EXPECT_NEAR(m_tilde(0.0, ct).real(), 2.0 * ct.strength() / ct.geometry.r_perp, 1e-12);
    EXPECT_NEAR(m_tilde(1e-9, ct).real() / m_tilde(0.0, ct).real(), 1.0, 1e-9);
    EXPECT_NEAR(std::abs(oracle::matrix_element_transform(0.0, ct) - m_tilde(0.0, ct)), 0.0,
                1e-8 * m_tilde(0.0, ct).real());
}

TEST(MatrixElement, Parity) {
    const auto cp = table_coupling(Orientation::parallel);
    const auto ct = table_coupling(Orientation::transverse);
    for (double p : {0.01, 0.2, 1.3, 7.0}) {
        // odd kernel: odd, purely imaginary transform
        EXPECT_NEAR(std::abs(m_tilde(-p, cp) + m_tilde(p, cp)), 0.0, 1e-15);
        EXPECT_EQ(m_tilde(p, cp).real(), 0.0);
        EXPECT_NEAR(std::abs(m_tilde(-p, cp) - std::conj(m_tilde(p, cp))), 0.0, 1e-15);
        // even kernel: even, real transform
        EXPECT_EQ(m_tilde(-p, ct), m_tilde(p, ct));
        EXPECT_EQ(m_tilde(p, ct).imag(), 0.0);
    }
}

TEST(MatrixElement, RecoilPhaseOfParallelDipole) {
    const auto cp = table_coupling(Orientation::parallel);
    const double p = recoil_momentum(2.0, cp.kin.v0);
    EXPECT_LT(p, 0.0);
    EXPECT_NEAR(std::arg(m_tilde(p, cp)), pi / 2, 1e-12);
}

TEST(MatrixElement, DecaysBeyondContractedLength) {
    const auto ct = table_coupling(Orientation::transverse);
    const double k_scale = ct.kin.gamma / ct.geometry.r_perp;
    const double a = std::abs(m_tilde(constants::hbar * 5 * k_scale, ct));
    const double b = std::abs(m_tilde(constants::hbar * 20 * k_scale, ct));
    EXPECT_LT(b, 1e-4 * a);
}

TEST(SpatialKernel, Symmetry) {
    const auto cp = table_coupling(Orientation::parallel);
    const auto ct = table_coupling(Orientation::transverse);
    for (double z : {0.1, 1.0, 5.0}) {
        EXPECT_DOUBLE_EQ(m_spatial(-z, cp), -m_spatial(z, cp));
        EXPECT_DOUBLE_EQ(m_spatial(-z, ct), m_spatial(z, ct));
    }
    EXPECT_DOUBLE_EQ(m_spatial(0.0, cp), 0.0);
    EXPECT_NEAR(m_spatial(0.0, ct), ct.strength() * ct.kin.gamma / (2.4 * 2.4), 1e-12);
}

TEST(Recoil, SignAndMagnitude) {
    const auto k = kinematics_from_kinetic_energy(200e3);
    EXPECT_NEAR(recoil_momentum(2.0, k.v0), -2.0 / k.v0, 1e-15);
    EXPECT_THROW(recoil_momentum(2.0, 0.0), DomainError);
}

TEST(Coupling, RejectsZeroDipole) {
    TlsSpec t = make_tls(2.0, 5.0, Orientation::parallel);
    t.dipole = 0.0;
    EXPECT_THROW(make_coupling(t, 2.4, kinematics_from_kinetic_energy(200e3)), DomainError);
}
