#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psc/spin_algebra.hpp"

using namespace psc;

namespace {

const SpinState up = SpinState::spin_up(), dn = SpinState::spin_down();

double max_diff(const SpinMatrix& a, const oracle::Mat2& b) {
    double d = 0.0;
    for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(a.m[i] - b[i]));
    return d;
}

}  // namespace

TEST(SpinMatrix, PauliAlgebra) {
    SpinMatrix x = SpinMatrix::sigma_x(), y = SpinMatrix::sigma_y(), z = SpinMatrix::sigma_z();
    SpinMatrix xy = x * y, iz = I * z;
    for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(xy.m[i] - iz.m[i]), 1e-15);
    SpinMatrix zz = z * z;
    for (int i = 0; i < 4; ++i) EXPECT_EQ(zz.m[i], SpinMatrix::identity().m[i]);
    EXPECT_EQ(braket(up, z, up), cplx(1.0));
    EXPECT_EQ(braket(dn, x, up), cplx(1.0));
}

TEST(Su2Exp, MatchesPowerSeries) {
    auto g = oracle::rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        cplx a(u(g), 0.5 * u(g)), b(u(g), 0.5 * u(g)), c0(u(g), 0.2 * u(g));
        SpinMatrix m = su2_exp(a, b, c0);
        oracle::Mat2 ref = oracle::spin_propagator(a, b, c0);
        double scale = 0.0;
        for (cplx v : ref) scale = std::max(scale, std::abs(v));
        EXPECT_LT(max_diff(m, ref) / scale, 1e-12) << "a=" << a << " b=" << b;
    }
}

TEST(Su2Exp, SmallArgumentSeriesBranch) {
    // |a² + b²| below and above the series threshold
    for (double s : {1e-9, 1e-4, 0.3, 0.7, 0.71, 2.0}) {
        cplx a(s, 0.1 * s), b(0.5 * s, -0.2 * s);
        EXPECT_LT(max_diff(su2_exp(a, b, 0.0), oracle::spin_propagator(a, b, 0.0)), 1e-14) << s;
    }
}

TEST(Su2Exp, UnitaryForRealArguments) {
    auto g = oracle::rng(2);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 100; ++i) {
        SpinMatrix m = su2_exp(u(g), u(g), u(g));
        SpinMatrix p = m.adjoint() * m;
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(p.m[k] - SpinMatrix::identity().m[k]), 0.0, 1e-14);
    }
}

TEST(CosSinc, DerivativesAgainstFiniteDifferences) {
    for (cplx u : {cplx(0.2, 0.1), cplx(0.45, -0.1), cplx(0.6, 0.3), cplx(-3.0, 1.0), cplx(10.0, -2.0)}) {
        CosSinc c = cos_sinc(u);
        double h = 1e-5;
        CosSinc p = cos_sinc(u + h), m = cos_sinc(u - h);
        EXPECT_LT(std::abs((p.C - m.C) / (2 * h) - c.C1), 1e-8);
        EXPECT_LT(std::abs((p.S - m.S) / (2 * h) - c.S1), 1e-8);
        EXPECT_LT(std::abs((p.C1 - m.C1) / (2 * h) - c.C2), 1e-8);
        EXPECT_LT(std::abs((p.S1 - m.S1) / (2 * h) - c.S2), 1e-8);
        EXPECT_LT(std::abs((p.C2 - m.C2) / (2 * h) - c.C3), 1e-8);
        EXPECT_LT(std::abs((p.S2 - m.S2) / (2 * h) - c.S3), 1e-8);
    }
}

TEST(CosSinc, ContinuousAcrossSeriesThreshold) {
    CosSinc a = cos_sinc(cplx(0.5 - 1e-12, 0.0)), b = cos_sinc(cplx(0.5 + 1e-12, 0.0));
    EXPECT_NEAR(std::abs(a.C - b.C), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(a.S3 - b.S3), 0.0, 1e-10);
}

TEST(InfluenceHeavy, MatchesMatrixElement) {
    HeavyParams p;
    auto g = oracle::rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        cplx q(u(g), 0.5 * u(g));
        for (const SpinState& a : {up, dn})
            for (const SpinState& b : {up, dn}) {
                oracle::Mat2 m = oracle::spin_propagator(-p.F * p.t * q, p.J * p.t, 0.0);
                cplx ref = oracle::element(m, b.up, b.down, a.up, a.down);
                EXPECT_LT(std::abs(influence_heavy(q, a, b, p) - ref), 1e-12);
                EXPECT_LT(std::abs(influence_heavy_jet(q, a, b, p).v - ref), 1e-12);
            }
    }
}

TEST(InfluenceHeavy, TimeZeroIsOverlap) {
    HeavyParams p;
    p.t = 0.0;
    EXPECT_EQ(influence_heavy(0.3, up, up, p), cplx(1.0));
    EXPECT_EQ(influence_heavy(0.3, up, dn, p), cplx(0.0));
}

TEST(InfluenceHeavy, JetAgainstFiniteDifferences) {
    HeavyParams p;
    auto g = oracle::rng(4);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        cplx q(u(g), 0.5 * u(g));
        auto f = [&](cplx x) { return influence_heavy(x, up, up, p); };
        auto f2 = [&](cplx x) { return influence_heavy_jet(x, up, up, p).d2; };
        Jet j = influence_heavy_jet(q, up, up, p);
        double s = std::max(1.0, std::abs(j.v));
        EXPECT_LT(std::abs(j.d1 - oracle::d1(f, q)) / s, 1e-8);
        EXPECT_LT(std::abs(j.d2 - oracle::d2(f, q)) / s, 1e-6);
        EXPECT_LT(std::abs(j.d3 - oracle::d1(f2, q)) / s, 1e-7);
    }
}

TEST(InfluenceKick, JetAgainstFiniteDifferences) {
    KickParams p;
    auto g = oracle::rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        cplx q(u(g), 0.3 * u(g));
        const SpinState& a = i % 2 ? up : dn;
        auto f = [&](cplx x) { return influence_kick(x, a, up, p); };
        auto f2 = [&](cplx x) { return influence_kick_jet(x, a, up, p).d2; };
        Jet j = influence_kick_jet(q, a, up, p);
        double s = std::max(1.0, std::abs(j.v));
        EXPECT_LT(std::abs(j.v - f(q)) / s, 1e-12);
        EXPECT_LT(std::abs(j.d1 - oracle::d1(f, q)) / s, 1e-7);
        EXPECT_LT(std::abs(j.d2 - oracle::d2(f, q)) / s, 1e-5);
        EXPECT_LT(std::abs(j.d3 - oracle::d1(f2, q)) / s, 1e-6);
    }
}

TEST(InfluenceKick, MatchesMatrixElement) {
    KickParams p;
    cplx q(0.7, 0.2);
    oracle::Mat2 m = oracle::spin_propagator(p.deltaK * std::cos(q), p.J, p.K * std::cos(q) / p.hbar);
    EXPECT_LT(std::abs(influence_kick(q, up, dn, p) - oracle::element(m, dn.up, dn.down, up.up, up.down)), 1e-12);
}

TEST(EffectiveAction, LogDerivatives) {
    HeavyParams p;
    cplx q(0.3, -0.2);
    LogJet S = eff_action_heavy(q, up, up, p);
    auto f = [&](cplx x) { return eff_action_heavy(x, up, up, p).v; };
    EXPECT_LT(std::abs(S.d1 - oracle::d1(f, q)), 1e-8);
    EXPECT_LT(std::abs(S.d2 - oracle::d2(f, q)), 1e-6);
    EXPECT_LT(std::abs(std::exp(I * S.v / p.hbar) - influence_heavy(q, up, up, p)), 1e-12);
}

TEST(EffectivePotential, KeepsStandardMapPartAnalytic) {
    KickParams p;
    p.deltaK = 0.0;
    p.J = 0.0;
    // Spin factor is e^{0} = 1 for spin up, so V = K cos q with no log branch at all.
    for (double x : {-3.0, 0.0, 2.0, 7.0}) {
        cplx q(x, 0.4);
        LogJet V = eff_potential_kick(q, up, up, p);
        EXPECT_LT(std::abs(V.v - p.K * std::cos(q)), 1e-14);
        EXPECT_LT(std::abs(V.d1 + p.K * std::sin(q)), 1e-14);
    }
}

TEST(Zeros, HeavyZerosAreZeros) {
    HeavyParams p;
    auto zs = find_z_zeros_heavy(Rect::around(0.0, 3.0), up, up, p);
    ASSERT_FALSE(zs.empty());
    for (cplx z : zs) EXPECT_LT(std::abs(influence_heavy(z, up, up, p)), 1e-10);
    // the zero nearest the real axis sits on the imaginary axis
    auto it = std::min_element(zs.begin(), zs.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    EXPECT_NEAR(it->real(), 0.0, 1e-9);
    EXPECT_NEAR(it->imag(), 0.50576, 1e-5);
}

TEST(Zeros, EffectiveActionThrowsAtZero) {
    HeavyParams p;
    auto zs = find_z_zeros_heavy(Rect::around(0.0, 1.0), up, up, p);
    ASSERT_FALSE(zs.empty());
    EXPECT_THROW(eff_action_heavy(zs.front(), up, up, p), ZeroOfInfluenceFunctional);
    try {
        eff_action_heavy(zs.front(), up, up, p);
    } catch (const ZeroOfInfluenceFunctional& e) {
        EXPECT_EQ(e.q, zs.front());
        EXPECT_EQ(e.code(), "ZeroOfInfluenceFunctional");
    }
}

TEST(Zeros, KickZerosArePeriodic) {
    KickParams p;
    auto zs = find_z_zeros_kick(Rect{-kPi, kPi, -4.0, 4.0}, up, up, p);
    ASSERT_FALSE(zs.empty());
    for (cplx z : zs) {
        EXPECT_LT(std::abs(kick_spin_factor_jet(z, up, up, p).v), 1e-10);
        EXPECT_LT(std::abs(kick_spin_factor_jet(z + 2.0 * kPi, up, up, p).v), 1e-9);
    }
}
