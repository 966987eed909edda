// complex_dynamics.hpp: complexified trajectories under Klauder boundary conditions
//
// A trajectory map sends the initial parameter Q' (with P' fixed by the entrance
// label) to the final point (q̄_N, p̄_N) and reports:
//   Qf = (q̄_N - i p̄_N)/√2, Pf = (p̄_N - i q̄_N)/√2, jac = dQf/dQ',
//   action = entrance terms + bulk action, with principal logarithms.
// The exit terms for a label (q'', p'') are added here. They split as
//   (i/2)(q̄-q'')² - p''(q̄-q''/2) = holomorphic(q̄, Q'') + (i/2)|Q''|²,
// so F_hol(Q') = action + (i/2)q̄² - i√2 q̄ Qf + (i/2)Qf² is holomorphic in Q'
// with dF_hol/dQ' = Pf·jac.

#pragma once

#include <concepts>
#include <limits>
#include <optional>

#include "psc/core.hpp"

namespace psc {

struct ComplexPoint {
    cplx q{}, p{};
};

struct KlauderVars {
    cplx Q{}, P{};
};

struct CoherentLabel {
    double q{0}, p{0};
};

inline KlauderVars to_klauder(const ComplexPoint& z) {
    return {(z.q - I * z.p) / kSqrt2, (z.p - I * z.q) / kSqrt2};
}

inline ComplexPoint from_klauder(const KlauderVars& k) {
    return {(k.Q + I * k.P) / kSqrt2, (k.P + I * k.Q) / kSqrt2};
}

// (q - ip)/√2: the Q value of a real label; also the real-trajectory anchor for Q'.
inline cplx label_Q(const CoherentLabel& l) { return cplx(l.q, -l.p) / kSqrt2; }
inline cplx label_P(const CoherentLabel& l) { return cplx(l.p, -l.q) / kSqrt2; }

// Inverse of label_Q for an arbitrary complex Q.
inline CoherentLabel label_of(cplx Q) { return {kSqrt2 * Q.real(), -kSqrt2 * Q.imag()}; }

inline ComplexPoint initial_point(cplx Qprime, const CoherentLabel& entrance) {
    return from_klauder({Qprime, label_P(entrance)});
}

inline cplx entrance_terms(cplx q0, const CoherentLabel& in) {
    cplx d = q0 - in.q;
    return 0.5 * I * d * d + in.p * (q0 - 0.5 * in.q);
}

inline cplx exit_terms(cplx qN, const CoherentLabel& out) {
    cplx d = qN - out.q;
    return 0.5 * I * d * d - out.p * (qN - 0.5 * out.q);
}

enum class MapStatus { ok, zero_hit, overflow };

struct MapPoint {
    MapStatus status{MapStatus::ok};
    cplx Qf{}, Pf{}, jac{};
    ComplexPoint end{};
    cplx action{};

    bool ok() const { return status == MapStatus::ok; }

    cplx F_hol() const {
        return action + 0.5 * I * end.q * end.q - I * kSqrt2 * end.q * Qf + 0.5 * I * Qf * Qf;
    }
    // Action with the exit label induced by the endpoint itself.
    cplx F_induced() const { return F_hol() + 0.5 * I * std::norm(Qf); }
    cplx F_exit(const CoherentLabel& out) const { return action + exit_terms(end.q, out); }
};

// Distance from a trajectory to the nearest zero of the influence functional at the
// step where it is applied.
struct ZeroProximity {
    double distance{std::numeric_limits<double>::infinity()};
    cplx q0{};
    int step{-1};
};

template <class M>
concept TrajectoryMap = requires(const M& m, cplx Q, double lam) {
    { m.evaluate(Q, lam) } -> std::same_as<MapPoint>;
    { m.entrance() } -> std::convertible_to<CoherentLabel>;
    { m.hbar() } -> std::convertible_to<double>;
    { m.zero_proximity(Q) } -> std::same_as<ZeroProximity>;
};

// Zero-step map: Q'' = Q'.
class IdentityMap {
public:
    IdentityMap(CoherentLabel entrance, double hbar) : in_(entrance), hbar_(hbar) {}

    MapPoint evaluate(cplx Qp, double = 1.0) const {
        MapPoint r;
        r.end = initial_point(Qp, in_);
        KlauderVars k = to_klauder(r.end);
        r.Qf = k.Q;
        r.Pf = k.P;
        r.jac = 1.0;
        r.action = entrance_terms(r.end.q, in_);
        return r;
    }
    CoherentLabel entrance() const { return in_; }
    double hbar() const { return hbar_; }
    ZeroProximity zero_proximity(cplx) const { return {}; }

private:
    CoherentLabel in_;
    double hbar_;
};

struct SaddleBranch {
    cplx Qprime{};
    cplx F{};
    cplx E{};
    cplx jac{};
    bool physical{true};
    bool near_v_psc{false};
    bool caustic_proximity{false};
    bool branch_uncertain{false};  // amplitude sign could not be transported
    double residual{0};

    cplx contribution(double hbar) const { return E * std::exp(I * F / hbar); }
};

struct SolveOptions {
    int seeds_per_axis{24};
    double half_width{4.0};  // in units of sqrt(hbar)
    double tol{1e-11};
    double dedupe{1e-7};
    int max_iter{80};
    int max_halvings{8};
    double runaway{60.0};  // abandon seeds further than this many sqrt(hbar) from the anchor
};

template <TrajectoryMap M>
std::vector<cplx> default_seeds(const M& map, const SolveOptions& o = {}) {
    cplx a = label_Q(map.entrance());
    return seed_grid(Rect::around(a, o.half_width * std::sqrt(map.hbar())), o.seeds_per_axis);
}

// Damped Newton iteration for Qf(Q') = target from a single seed.
template <TrajectoryMap M>
std::optional<cplx> newton_boundary(const M& map, cplx target, cplx seed, const SolveOptions& o = {}) {
    cplx anchor = label_Q(map.entrance());
    double far = o.runaway * std::sqrt(map.hbar());
    cplx Q = seed;
    MapPoint mp = map.evaluate(Q, 1.0);
    if (!mp.ok()) return std::nullopt;
    double r = std::abs(mp.Qf - target);
    for (int it = 0; it < o.max_iter; ++it) {
        if (r < o.tol) return Q;
        if (mp.jac == cplx(0.0)) return std::nullopt;
        cplx step = -(mp.Qf - target) / mp.jac;
        bool accepted = false;
        double lam = 1.0;
        for (int h = 0; h <= o.max_halvings; ++h, lam *= 0.5) {
            cplx Qn = Q + lam * step;
            MapPoint mn = map.evaluate(Qn, 1.0);
            if (!mn.ok()) continue;
            double rn = std::abs(mn.Qf - target);
            if (rn < r) {
                Q = Qn;
                mp = mn;
                r = rn;
                accepted = true;
                break;
            }
        }
        if (!accepted) return r < o.tol ? std::optional<cplx>(Q) : std::nullopt;
        if (std::abs(Q - anchor) > far) return std::nullopt;
    }
    return r < o.tol ? std::optional<cplx>(Q) : std::nullopt;
}

// Follows E = jac^(-1/2) continuously along s in [0,1]. jac_at(s) returns
// nullopt where the map cannot be evaluated.
template <class Fn>
std::optional<cplx> track_inverse_sqrt(Fn&& jac_at, cplx E0, cplx jac0) {
    double s = 0.0, ds = 1.0 / 16.0;
    cplx E = E0, jac = jac0;
    while (s < 1.0) {
        double sn = std::min(1.0, s + ds);
        std::optional<cplx> jn = jac_at(sn);
        if (!jn || *jn == cplx(0.0) || std::abs(*jn / jac - 1.0) > 0.25) {
            ds *= 0.5;
            if (ds < 1e-10) return std::nullopt;
            continue;
        }
        cplx cand = 1.0 / std::sqrt(*jn);
        E = std::abs(cand - E) <= std::abs(cand + E) ? cand : -cand;
        jac = *jn;
        s = sn;
        ds = std::min(ds * 1.5, 1.0 / 8.0);
    }
    return E;
}

// Amplitude branch at Qroot. The anchor's own branch is fixed by switching the
// nonlinearity on (lambda: 0 → 1) from the free map, whose Jacobian has positive
// real part; then E is carried along a path in the Q'-plane to the root.
template <TrajectoryMap M>
std::optional<cplx> transport_amplitude(const M& map, cplx Qroot) {
    cplx anchor = label_Q(map.entrance());
    MapPoint m0 = map.evaluate(anchor, 0.0);
    if (!m0.ok()) return std::nullopt;
    cplx E0 = 1.0 / std::sqrt(m0.jac);
    auto lam_path = [&](double s) -> std::optional<cplx> {
        MapPoint m = map.evaluate(anchor, s);
        if (!m.ok()) return std::nullopt;
        return m.jac;
    };
    std::optional<cplx> Ea = track_inverse_sqrt(lam_path, E0, m0.jac);
    if (!Ea) return std::nullopt;
    cplx ja = map.evaluate(anchor, 1.0).jac;

    auto along = [&](cplx from, cplx to, cplx E, cplx j) -> std::optional<std::pair<cplx, cplx>> {
        auto path = [&](double s) -> std::optional<cplx> {
            MapPoint m = map.evaluate(from + s * (to - from), 1.0);
            if (!m.ok()) return std::nullopt;
            return m.jac;
        };
        std::optional<cplx> r = track_inverse_sqrt(path, E, j);
        if (!r) return std::nullopt;
        return std::make_pair(*r, map.evaluate(to, 1.0).jac);
    };

    if (auto r = along(anchor, Qroot, *Ea, ja)) return r->first;
    // Straight path blocked by a singular point: go around it.
    cplx d = Qroot - anchor;
    cplx mid = anchor + 0.5 * d;
    for (double k : {0.25, -0.25, 0.5, -0.5, 1.0, -1.0}) {
        cplx w = mid + I * k * (std::abs(d) > 1e-12 ? d : cplx(1.0));
        if (auto r1 = along(anchor, w, *Ea, ja))
            if (auto r2 = along(w, Qroot, r1->first, r1->second)) return r2->first;
    }
    return std::nullopt;
}

// Newton from every seed; each distinct root becomes a saddle branch.
template <TrajectoryMap M>
std::vector<SaddleBranch> solve_boundary(const M& map, const CoherentLabel& exit, const std::vector<cplx>& seeds,
                                         const SolveOptions& o = {}) {
    cplx target = label_Q(exit);
    std::vector<cplx> roots;
    for (cplx s : seeds)
        if (auto r = newton_boundary(map, target, s, o)) roots.push_back(*r);
    roots = dedupe_sorted(std::move(roots), o.dedupe);

    std::vector<SaddleBranch> out;
    out.reserve(roots.size());
    for (cplx Q : roots) {
        MapPoint mp = map.evaluate(Q, 1.0);
        SaddleBranch b;
        b.Qprime = Q;
        b.jac = mp.jac;
        b.F = mp.F_exit(exit);
        b.residual = std::abs(mp.Qf - target);
        b.caustic_proximity = std::abs(mp.jac) < 1e-8;
        if (auto E = transport_amplitude(map, Q)) {
            b.E = *E;
        } else {
            b.E = 1.0 / std::sqrt(mp.jac);
            b.branch_uncertain = true;
        }
        out.push_back(b);
    }
    return out;
}

template <TrajectoryMap M>
std::vector<SaddleBranch> solve_boundary(const M& map, const CoherentLabel& exit, const SolveOptions& o = {}) {
    return solve_boundary(map, exit, default_seeds(map, o), o);
}

// Relative difference between the analytic tangent map and a central difference.
template <TrajectoryMap M>
double tangent_map_check(const M& map, cplx Qp) {
    // fourth-order stencil with a small step: near zeros of the spin factor the map bends on short scales
    double h = 1e-5 * (1.0 + std::abs(Qp));
    MapPoint m = map.evaluate(Qp, 1.0);
    MapPoint a = map.evaluate(Qp + h, 1.0), b = map.evaluate(Qp - h, 1.0);
    MapPoint a2 = map.evaluate(Qp + 2.0 * h, 1.0), b2 = map.evaluate(Qp - 2.0 * h, 1.0);
    if (!m.ok() || !a.ok() || !b.ok() || !a2.ok() || !b2.ok()) return std::numeric_limits<double>::infinity();
    cplx fd = (8.0 * (a.Qf - b.Qf) - (a2.Qf - b2.Qf)) / (12.0 * h);
    double scale = std::max(std::abs(m.jac), 1e-300);
    return std::abs(fd - m.jac) / scale;
}

// Sum of E exp(iF/hbar) over branches marked physical with Im F below the amplitude cutoff.
inline cplx sum_branches(const std::vector<SaddleBranch>& bs, double hbar, double eps_amp = 1e-6) {
    double cut = hbar * std::log(1.0 / eps_amp);
    cplx s = 0.0;
    for (const auto& b : bs)
        if (b.physical && b.F.imag() <= cut) s += b.contribution(hbar);
    return s;
}

}  // namespace psc
