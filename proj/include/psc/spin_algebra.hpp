// spin_algebra.hpp: two-level propagators, influence functionals and their logs

#pragma once

#include <array>
#include <functional>

#include "psc/core.hpp"

namespace psc {

struct SpinState {
    cplx up{1.0}, down{0.0};

    static SpinState spin_up() { return {1.0, 0.0}; }
    static SpinState spin_down() { return {0.0, 1.0}; }
    double norm2() const { return std::norm(up) + std::norm(down); }
};

struct SpinMatrix {
    std::array<cplx, 4> m{};  // row-major

    cplx& operator()(int r, int c) { return m[2 * r + c]; }
    cplx operator()(int r, int c) const { return m[2 * r + c]; }

    static SpinMatrix identity() { return {{1.0, 0.0, 0.0, 1.0}}; }
    static SpinMatrix sigma_z() { return {{1.0, 0.0, 0.0, -1.0}}; }
    static SpinMatrix sigma_x() { return {{0.0, 1.0, 1.0, 0.0}}; }
    static SpinMatrix sigma_y() { return {{0.0, -I, I, 0.0}}; }

    SpinMatrix adjoint() const { return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}}; }

    friend SpinMatrix operator*(const SpinMatrix& a, const SpinMatrix& b) {
        SpinMatrix c;
        for (int r = 0; r < 2; ++r)
            for (int k = 0; k < 2; ++k) c(r, k) = a(r, 0) * b(0, k) + a(r, 1) * b(1, k);
        return c;
    }
    friend SpinMatrix operator+(const SpinMatrix& a, const SpinMatrix& b) {
        SpinMatrix c;
        for (int i = 0; i < 4; ++i) c.m[i] = a.m[i] + b.m[i];
        return c;
    }
    friend SpinMatrix operator*(cplx s, const SpinMatrix& a) {
        SpinMatrix c;
        for (int i = 0; i < 4; ++i) c.m[i] = s * a.m[i];
        return c;
    }
    SpinState apply(const SpinState& v) const {
        return {m[0] * v.up + m[1] * v.down, m[2] * v.up + m[3] * v.down};
    }
};

// <out| M |in>
inline cplx braket(const SpinState& out, const SpinMatrix& M, const SpinState& in) {
    SpinState w = M.apply(in);
    return std::conj(out.up) * w.up + std::conj(out.down) * w.down;
}

struct HeavyParams {
    double hbar{0.25};
    double F{1.0};
    double J{0.75};
    double t{1.5};
};

struct KickParams {
    double hbar{0.25};
    double K{0.4};
    double deltaK{1.0};
    double J{0.75};
    int N{3};
};

// C(u) = cos(sqrt u), S(u) = sin(sqrt u)/sqrt u and their first three u-derivatives.
// Both are entire in u = Omega^2, so no square-root branch enters.
struct CosSinc {
    cplx C, S, C1, S1, C2, S2, C3, S3;
};

inline CosSinc cos_sinc(cplx u) {
    CosSinc r;
    if (std::abs(u) < 0.5) {
        // Taylor series in u; terms fall off like |u|^k/(2k)!
        constexpr int kTerms = 18;
        cplx c[4]{}, s[4]{};
        cplx upow[kTerms];
        upow[0] = 1.0;
        for (int k = 1; k < kTerms; ++k) upow[k] = upow[k - 1] * u;
        double fc = 1.0, fs = 1.0;  // (2k)!, (2k+1)!
        for (int k = 0; k < kTerms; ++k) {
            if (k > 0) {
                fc *= (2.0 * k - 1.0) * (2.0 * k);
                fs *= (2.0 * k) * (2.0 * k + 1.0);
            }
            double sign = (k % 2 == 0) ? 1.0 : -1.0;
            double fall = 1.0;  // k!/(k-m)!
            for (int m = 0; m < 4 && m <= k; ++m) {
                c[m] += (sign * fall / fc) * upow[k - m];
                s[m] += (sign * fall / fs) * upow[k - m];
                fall *= (k - m);
            }
        }
        r.C = c[0]; r.C1 = c[1]; r.C2 = c[2]; r.C3 = c[3];
        r.S = s[0]; r.S1 = s[1]; r.S2 = s[2]; r.S3 = s[3];
        return r;
    }
    cplx w = std::sqrt(u);
    r.C = std::cos(w);
    r.S = std::sin(w) / w;
    r.C1 = -0.5 * r.S;
    r.S1 = (r.C - r.S) / (2.0 * u);
    r.C2 = -0.5 * r.S1;
    r.S2 = (r.C1 - 3.0 * r.S1) / (2.0 * u);
    r.C3 = -0.5 * r.S2;
    r.S3 = (r.C2 - 5.0 * r.S2) / (2.0 * u);
    return r;
}

// exp(-i (c0 + a sigma_z + b sigma_x))
inline SpinMatrix su2_exp(cplx a, cplx b, cplx c0) {
    CosSinc cs = cos_sinc(a * a + b * b);
    cplx ph = std::exp(-I * c0);
    return {{ph * (cs.C - I * cs.S * a), ph * (-I * cs.S * b), ph * (-I * cs.S * b), ph * (cs.C + I * cs.S * a)}};
}

namespace detail {

// Jet of g(q) = <out| exp(-i(a(q) sigma_z + b sigma_x)) |in> given the jet of a(q);
// b is constant.
inline Jet su2_element_jet(const Jet& a, cplx b, const SpinState& in, const SpinState& out) {
    cplx gam = braket(out, SpinMatrix::identity(), in);
    cplx alp = braket(out, SpinMatrix::sigma_z(), in);
    cplx bet = braket(out, SpinMatrix::sigma_x(), in);
    cplx u = a.v * a.v + b * b;
    cplx u1 = 2.0 * a.v * a.d1;
    cplx u2 = 2.0 * (a.d1 * a.d1 + a.v * a.d2);
    cplx u3 = 2.0 * (3.0 * a.d1 * a.d2 + a.v * a.d3);
    CosSinc cs = cos_sinc(u);
    auto chain = [&](cplx f, cplx f1, cplx f2, cplx f3) {
        return Jet{f, f1 * u1, f2 * u1 * u1 + f1 * u2, f3 * u1 * u1 * u1 + 3.0 * f2 * u1 * u2 + f1 * u3};
    };
    Jet C = chain(cs.C, cs.C1, cs.C2, cs.C3);
    Jet S = chain(cs.S, cs.S1, cs.S2, cs.S3);
    Jet g{a.v * alp + b * bet, a.d1 * alp, a.d2 * alp, a.d3 * alp};
    Jet out_jet;
    out_jet.v = gam * C.v - I * (S.v * g.v);
    out_jet.d1 = gam * C.d1 - I * (S.d1 * g.v + S.v * g.d1);
    out_jet.d2 = gam * C.d2 - I * (S.d2 * g.v + 2.0 * S.d1 * g.d1 + S.v * g.d2);
    out_jet.d3 = gam * C.d3 - I * (S.d3 * g.v + 3.0 * S.d2 * g.d1 + 3.0 * S.d1 * g.d2 + S.v * g.d3);
    return out_jet;
}

}  // namespace detail

// Z(q) = <out| exp(-i V(q) t / hbar) |in> for the heavy two-state model, with derivatives.
inline Jet influence_heavy_jet(cplx q, const SpinState& in, const SpinState& out, const HeavyParams& p) {
    double s = -p.F * p.t;
    return detail::su2_element_jet(Jet{s * q, s, 0.0, 0.0}, p.J * p.t, in, out);
}

inline cplx influence_heavy(cplx q, const SpinState& in, const SpinState& out, const HeavyParams& p) {
    return braket(out, su2_exp(-p.F * q * p.t, p.J * p.t, 0.0), in);
}

// Spin factor of the kick, z(q) = <out| exp(-i(dK cos q sigma_z + J sigma_x)) |in>.
inline Jet kick_spin_factor_jet(cplx q, const SpinState& in, const SpinState& out, const KickParams& p) {
    cplx c = std::cos(q), s = std::sin(q);
    Jet a{p.deltaK * c, -p.deltaK * s, -p.deltaK * c, p.deltaK * s};
    return detail::su2_element_jet(a, p.J, in, out);
}

// Z(q) = exp(-i K cos q / hbar) z(q)
inline cplx influence_kick(cplx q, const SpinState& in, const SpinState& out, const KickParams& p) {
    cplx c = std::cos(q);
    return braket(out, su2_exp(p.deltaK * c, p.J, p.K * c / p.hbar), in);
}

inline Jet influence_kick_jet(cplx q, const SpinState& in, const SpinState& out, const KickParams& p) {
    Jet z = kick_spin_factor_jet(q, in, out, p);
    cplx c = std::cos(q), s = std::sin(q);
    double k = p.K / p.hbar;
    // phi = -i k cos q
    cplx f1 = I * k * s, f2 = I * k * c, f3 = -I * k * s;
    cplx e = std::exp(-I * k * c);
    Jet r;
    r.v = e * z.v;
    r.d1 = e * (f1 * z.v + z.d1);
    r.d2 = e * ((f2 + f1 * f1) * z.v + 2.0 * f1 * z.d1 + z.d2);
    r.d3 = e * ((f3 + 3.0 * f1 * f2 + f1 * f1 * f1) * z.v + 3.0 * (f2 + f1 * f1) * z.d1 + 3.0 * f1 * z.d2 + z.d3);
    return r;
}

// Logarithmic jet: value = scale * log Z (principal) plus an optional analytic
// part, derivatives exact. Z itself is kept so callers can track winding.
struct LogJet {
    cplx v{}, d1{}, d2{}, d3{};
    cplx Z{};
};

inline constexpr double kZeroTol = 1e-12;

namespace detail {

inline LogJet scaled_log(const Jet& z, cplx scale) {
    cplx r1 = z.d1 / z.v, r2 = z.d2 / z.v, r3 = z.d3 / z.v;
    LogJet L;
    L.Z = z.v;
    L.v = scale * std::log(z.v);
    L.d1 = scale * r1;
    L.d2 = scale * (r2 - r1 * r1);
    L.d3 = scale * (r3 - 3.0 * r2 * r1 + 2.0 * r1 * r1 * r1);
    return L;
}

}  // namespace detail

// S(q) = -i hbar ln Z(q) for the heavy model.
inline LogJet eff_action_heavy(cplx q, const SpinState& in, const SpinState& out, const HeavyParams& p) {
    Jet z = influence_heavy_jet(q, in, out, p);
    if (std::abs(z.v) < kZeroTol) throw ZeroOfInfluenceFunctional(q);
    return detail::scaled_log(z, -I * p.hbar);
}

// V(q) = i hbar ln Z_n(q) = K cos q + i hbar ln z(q); the standard-map part is kept
// analytic so the principal log only sees the spin factor.
inline LogJet eff_potential_kick(cplx q, const SpinState& in, const SpinState& out, const KickParams& p) {
    Jet z = kick_spin_factor_jet(q, in, out, p);
    if (std::abs(z.v) < kZeroTol) throw ZeroOfInfluenceFunctional(q);
    LogJet L = detail::scaled_log(z, I * p.hbar);
    cplx c = std::cos(q), s = std::sin(q);
    L.v += p.K * c;
    L.d1 += -p.K * s;
    L.d2 += -p.K * c;
    L.d3 += p.K * s;
    L.Z = z.v * std::exp(-I * p.K * c / p.hbar);
    return L;
}

// Zeros of an entire function inside a window by grid-seeded Newton iteration.
// fn returns the value and first derivative.
template <class Fn>
std::vector<cplx> find_zeros(const Rect& window, Fn&& fn, int seeds_per_axis = 40) {
    std::vector<cplx> found;
    for (cplx q : seed_grid(window, seeds_per_axis)) {
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            Jet z = fn(q);
            if (!finite(z.v) || !finite(z.d1)) break;
            if (std::abs(z.v) < 1e-13) { ok = true; break; }
            if (z.d1 == cplx(0.0)) break;
            q -= z.v / z.d1;
        }
        if (!ok || !finite(q)) continue;
        if (!window.contains(q)) continue;
        if (std::abs(fn(q).v) < 1e-10) found.push_back(q);
    }
    return dedupe_sorted(std::move(found), 1e-6);
}

inline std::vector<cplx> find_z_zeros_heavy(const Rect& window, const SpinState& in, const SpinState& out,
                                            const HeavyParams& p, int seeds_per_axis = 40) {
    return find_zeros(window, [&](cplx q) { return influence_heavy_jet(q, in, out, p); }, seeds_per_axis);
}

// The exponential prefactor never vanishes, so the zeros of Z_n are those of the spin factor.
inline std::vector<cplx> find_z_zeros_kick(const Rect& window, const SpinState& in, const SpinState& out,
                                           const KickParams& p, int seeds_per_axis = 40) {
    return find_zeros(window, [&](cplx q) { return kick_spin_factor_jet(q, in, out, p); }, seeds_per_axis);
}

}  // namespace psc
