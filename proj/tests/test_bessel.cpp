#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "feberi/bessel.hpp"
#include "oracles.hpp"

using namespace feberi;

TEST(Bessel, ReferenceValues) {
    EXPECT_NEAR(bessel_k0(1.0), 0.421024438240708, 1e-13);
    EXPECT_NEAR(bessel_k1(1.0), 0.601907230197235, 1e-13);
}

TEST(Bessel, SmallArgumentAsymptotics) {
    const double x = 1e-6;
    EXPECT_NEAR(bessel_k0(x), -std::log(x / 2) - constants::euler_gamma, 1e-9);
    EXPECT_NEAR(bessel_k1(x) * x, 1.0, 1e-9);
}

TEST(Bessel, UnderflowAndDomain) {
    EXPECT_EQ(bessel_k0(800.0), 0.0);
    EXPECT_EQ(bessel_k1(800.0), 0.0);
    EXPECT_THROW(bessel_k0(0.0), DomainError);
    EXPECT_THROW(bessel_k1(-1.0), DomainError);
}

TEST(Bessel, AgreesWithIntegralRepresentation) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(std::log(1e-3), std::log(50.0));
    for (int i = 0; i < 60; ++i) {
        const double x = std::exp(u(rng));
        EXPECT_NEAR(bessel_k0(x) / oracle::bessel_k(0.0, x), 1.0, 1e-6) << "x = " << x;
        EXPECT_NEAR(bessel_k1(x) / oracle::bessel_k(1.0, x), 1.0, 1e-6) << "x = " << x;
    }
}

TEST(Bessel, AgreesWithStandardLibrary) {
    for (double x = 1e-4; x < 600.0; x *= 1.37) {
        EXPECT_NEAR(bessel_k0(x) / std::cyl_bessel_k(0.0, x), 1.0, 1e-12) << x;
        EXPECT_NEAR(bessel_k1(x) / std::cyl_bessel_k(1.0, x), 1.0, 1e-12) << x;
    }
}

TEST(Bessel, ContinuousAtBranchSwitch) {
    const double e = 1e-10;
    EXPECT_NEAR(bessel_k0(2.0 - e) / bessel_k0(2.0 + e), 1.0, 1e-9);
    EXPECT_NEAR(bessel_k1(2.0 - e) / bessel_k1(2.0 + e), 1.0, 1e-9);
}

TEST(Bessel, MonotoneDecreasingAndOrdered) {
    double prev0 = INFINITY, prev1 = INFINITY;
    for (double x = 0.01; x < 40.0; x += 0.05) {
        const double k0 = bessel_k0(x), k1 = bessel_k1(x);
        EXPECT_LT(k0, prev0);
        EXPECT_LT(k1, prev1);
        EXPECT_GT(k1, k0);
        prev0 = k0;
        prev1 = k1;
    }
}
