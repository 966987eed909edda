#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psc/heavy_model.hpp"

using namespace psc;

namespace {
const SpinState up = SpinState::spin_up(), dn = SpinState::spin_down();
}

TEST(ExactKernel, TimeZeroSameLabelIsOne) {
    HeavyParams p;
    p.t = 0.0;
    CoherentLabel l{0.4, -0.7};
    EXPECT_LT(std::abs(exact_kernel(l, l, up, up, p) - 1.0), 1e-11);
    EXPECT_LT(std::abs(exact_kernel(l, l, up, dn, p)), 1e-15);
}

TEST(ExactKernel, TimeZeroGenericLabelsIsOverlap) {
    HeavyParams p;
    p.t = 0.0;
    auto g = oracle::rng(21);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 20; ++i) {
        CoherentLabel a{u(g), u(g)}, b{u(g), u(g)};
        cplx k = exact_kernel(a, b, up, up, p);
        EXPECT_LT(std::abs(k - oracle::coherent_overlap(a.q, a.p, b.q, b.p, p.hbar)), 1e-10);
        EXPECT_LT(std::abs(std::abs(k) - std::abs(oracle::coherent_overlap_quadrature(a.q, a.p, b.q, b.p, p.hbar))), 1e-10);
    }
}

TEST(ExactKernel, FullShiftConventionDiffersByPhase) {
    HeavyParams p;
    CoherentLabel a{0.3, 0.5}, b{-0.2, -0.4};
    cplx h = exact_kernel(a, b, up, up, p, PhaseConvention::half_shift);
    cplx f = exact_kernel(a, b, up, up, p, PhaseConvention::full_shift);
    EXPECT_NEAR(std::abs(h), std::abs(f), 1e-12);
    cplx expect = std::exp(I * (a.q * a.p - b.q * b.p) / (2.0 * p.hbar));
    EXPECT_LT(std::abs(h - f * expect), 1e-11);
}

TEST(ExactKernel, ConjugationSymmetryWithReversedHamiltonian) {
    HeavyParams p, rev;
    rev.F = -p.F;
    rev.J = -p.J;
    CoherentLabel a{0.2, -0.3}, b{-0.6, 0.9};
    for (const SpinState& si : {up, dn})
        for (const SpinState& so : {up, dn}) {
            cplx k1 = exact_kernel(a, b, si, so, p);
            cplx k2 = exact_kernel(b, a, so, si, rev);
            EXPECT_LT(std::abs(k1 - std::conj(k2)), 1e-10);
        }
}

TEST(ExactKernel, SpinTransitionsConserveProbability) {
    // sum over exit spins of |K|² integrated over the exit label is 2 pi hbar
    HeavyParams p;
    CoherentLabel in{0.0, 0.0};
    const int n = 48;
    double lo_q = -3.0, hi_q = 3.0, lo_p = -4.0, hi_p = 3.0;
    double dq = (hi_q - lo_q) / n, dp = (hi_p - lo_p) / n;
    double s = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            CoherentLabel out{lo_q + (i + 0.5) * dq, lo_p + (j + 0.5) * dp};
            s += std::norm(exact_kernel(in, out, up, up, p)) + std::norm(exact_kernel(in, out, up, dn, p));
        }
    EXPECT_NEAR(s * dq * dp / (2.0 * kPi * p.hbar), 1.0, 2e-3);
}

TEST(ExactKernel, QuadratureDepthLimitSurfaces) {
    auto f = [](double x) { return cplx(std::exp(std::sin(1e4 * x))); };
    EXPECT_THROW(detail::integrate_absolute(f, 0.0, 1.0, 1e-14, 2, 1), QuadratureFailure);
}

TEST(HeavyMap, JacobianIdentityAndStationarity) {
    HeavyParams p;
    CoherentLabel in{0.0, 0.0};
    HeavyMap m(in, up, up, p);
    for (CoherentLabel out : {CoherentLabel{0.0, -0.85}, CoherentLabel{0.0, 1.0}, CoherentLabel{1.2, -1.5}}) {
        auto bs = solve_boundary(m, out);
        ASSERT_FALSE(bs.empty());
        HeavyExponent phi{in, out, p, up, up};
        for (const auto& b : bs) {
            cplx q = initial_point(b.Qprime, in).q;
            Jet j = phi.phi(q);
            EXPECT_LT(std::abs(j.d1), 1e-9);
            EXPECT_LT(std::abs(b.jac - (-0.5 * I * j.d2)), 1e-10 * std::max(1.0, std::abs(b.jac)));
            // E² (-i Phi''/2) = 1 and F = Phi
            EXPECT_LT(std::abs(b.E * b.E * (-0.5 * I * j.d2) - 1.0), 1e-9);
            EXPECT_LT(std::abs(std::exp(I * (b.F - j.v) / p.hbar) - 1.0), 1e-9);
        }
    }
}

TEST(HeavyMap, SaddlesAtReferenceExits) {
    HeavyParams p;
    HeavyMap m({0.0, 0.0}, up, up, p);
    auto qbar = [&](const SaddleBranch& b) { return initial_point(b.Qprime, m.entrance()).q; };
    auto near_any = [&](const std::vector<SaddleBranch>& bs, cplx q) {
        for (const auto& b : bs)
            if (std::abs(qbar(b) - q) < 1e-3) return true;
        return false;
    };
    auto b1 = solve_boundary(m, {0.0, 1.0});
    EXPECT_TRUE(near_any(b1, cplx(0.0, -0.2177)));
    EXPECT_TRUE(near_any(b1, cplx(0.0, 0.3396)));
    auto b2 = solve_boundary(m, {0.0, -0.85});
    EXPECT_TRUE(near_any(b2, cplx(0.345, 0.506)));
    EXPECT_TRUE(near_any(b2, cplx(-0.345, 0.506)));
}

TEST(SemiclassicalKernel, FreeCaseIsExact) {
    HeavyParams p;
    p.F = 0.0;
    p.J = 0.0;
    CoherentLabel in{0.1, 0.3}, out{0.5, -0.2};
    KernelResult r = semiclassical_kernel(in, out, up, up, p);
    EXPECT_LT(std::abs(r.value - exact_kernel(in, out, up, up, p)), 1e-10);
}

TEST(SemiclassicalKernel, FarFromCausticsMatchesQuadrature) {
    HeavyParams p;
    CoherentLabel in{0.0, 0.0};
    HeavyMap m(in, up, up, p);
    StokesAnalysis A = heavy_stokes(m);
    HeavyKernelOptions o;
    o.stokes = &A;
    CoherentLabel out{0.0, 2.0};
    double sc = std::norm(semiclassical_kernel(m, out, o).value);
    double ex = std::norm(exact_kernel(in, out, up, up, p));
    EXPECT_LT(std::abs(sc - ex) / ex, 0.02);
}

TEST(SemiclassicalKernel, NoRootsSurfaces) {
    HeavyParams p;
    HeavyMap m({0.0, 0.0}, up, up, p);
    HeavyKernelOptions o;
    o.solve.seeds_per_axis = 1;
    o.solve.max_iter = 0;
    EXPECT_THROW(semiclassical_kernel(m, {0.3, 0.4}, o), NoRoots);
}

TEST(HusimiGrid, ShapesAndProvenance) {
    HeavyParams p;
    HusimiGrids g = husimi_grid({0.0, 0.0}, up, up, p, Rect{-1.0, 1.0, -1.0, 1.0}, 16, {}, false);
    EXPECT_EQ(g.exact.values.size(), 256u);
    EXPECT_EQ(g.exact.provenance, "exact");
    EXPECT_EQ(g.semiclassical.provenance, "semiclassical");
    EXPECT_EQ(g.exact.x.name, "q");
    EXPECT_THROW(husimi_grid({0.0, 0.0}, up, up, p, Rect{-1, 1, -1, 1}, 8), ConfigError);
}

TEST(ImfLandscape, MarksZerosAndCaustics) {
    HeavyParams p;
    HeavyMap m({0.0, 0.0}, up, up, p);
    Rect w = Rect::around(0.0, 2.0);
    ImfLandscape L = imf_landscape(m, w, 32);
    EXPECT_FALSE(L.zero_marks.empty());
    bool has_v = false;
    for (const auto& c : L.caustics) has_v |= c.kind == CausticKind::v_psc;
    EXPECT_TRUE(has_v);
    EXPECT_EQ(L.field.values.size(), 32u * 32u);
}
