// caustics_stokes.hpp: caustics of a trajectory map, Stokes lines, unphysical regions
//
// A caustic is a zero of jac = dQ''/dQ'. Near a fold the two coalescing branches
// sit at Q' and roughly 2Q'_c - Q', and their action difference is cubic,
// ΔF ≈ C (Q' - Q'_c)³. Stokes lines are the curves Re ΔF = 0. We follow the
// three of them on which the branch at Q' is the subdominant one (Im ΔF > 0).
// The region bounded by two adjacent lines is where the branch at Q' is dropped.

#pragma once

#include <array>
#include <numbers>

#include "psc/complex_dynamics.hpp"

namespace psc {

enum class CausticKind { a_psc, v_psc };

inline const char* to_string(CausticKind k) { return k == CausticKind::v_psc ? "v-PSC" : "a-PSC"; }

struct CausticPoint {
    cplx Qprime{};
    CausticKind kind{CausticKind::a_psc};
    std::optional<cplx> source_zero;
    int source_step{-1};
    double zero_distance{std::numeric_limits<double>::infinity()};
    cplx jac{};    // residual Jacobian at the caustic
    cplx djac{};   // d jac / dQ'
    cplx image{};  // Q'' of the caustic
    double imF{};  // Im F with the induced exit label
    // Initial parameters of the two branches that merge here, resolved for an exit
    // label slightly off the caustic image. Empty when they could not be resolved.
    std::vector<cplx> branch_pair;
};

struct CausticOptions {
    int resolution{40};
    double r_v{1.0};  // v-PSC radius in units of sqrt(hbar)
    double accept{1e-8};
    double dedupe{1e-7};
    int max_iter{60};
};

template <TrajectoryMap M>
std::optional<cplx> jac_derivative(const M& map, cplx Q) {
    const double h = 1e-6;
    MapPoint a = map.evaluate(Q + h, 1.0), b = map.evaluate(Q - h, 1.0);
    if (!a.ok() || !b.ok()) return std::nullopt;
    return (a.jac - b.jac) / (2.0 * h);
}

template <TrajectoryMap M>
std::optional<cplx> newton_caustic(const M& map, cplx seed, const CausticOptions& o) {
    cplx Q = seed;
    MapPoint mp = map.evaluate(Q, 1.0);
    if (!mp.ok()) return std::nullopt;
    for (int it = 0; it < o.max_iter; ++it) {
        std::optional<cplx> dJ = jac_derivative(map, Q);
        if (!dJ || *dJ == cplx(0.0)) return std::nullopt;
        cplx step = -mp.jac / *dJ;
        if (!finite(step)) return std::nullopt;
        double lam = 1.0;
        bool accepted = false;
        for (int h = 0; h <= 8; ++h, lam *= 0.5) {
            MapPoint mn = map.evaluate(Q + lam * step, 1.0);
            if (mn.ok() && std::abs(mn.jac) < std::abs(mp.jac)) {
                Q += lam * step;
                mp = mn;
                accepted = true;
                break;
            }
        }
        if (!accepted || std::abs(lam * step) < 1e-15 * (1.0 + std::abs(Q))) break;
    }
    if (std::abs(mp.jac) < o.accept) return Q;
    return std::nullopt;
}

template <TrajectoryMap M>
CausticPoint describe_caustic(const M& map, cplx Q, const CausticOptions& o = {}) {
    CausticPoint c;
    c.Qprime = Q;
    MapPoint mp = map.evaluate(Q, 1.0);
    c.jac = mp.jac;
    c.djac = jac_derivative(map, Q).value_or(cplx(0.0));
    c.image = mp.Qf;
    c.imF = mp.F_induced().imag();
    ZeroProximity zp = map.zero_proximity(Q);
    c.zero_distance = zp.distance;
    if (zp.distance < o.r_v * std::sqrt(map.hbar())) {
        c.kind = CausticKind::v_psc;
        c.source_zero = zp.q0;
        c.source_step = zp.step;
    }
    // Two roots for an exit label displaced by delta from the image: Q'' ≈ image + djac ε²/2.
    if (c.djac != cplx(0.0)) {
        double delta = 1e-3 * std::sqrt(map.hbar());
        cplx eps = std::sqrt(2.0 * delta / c.djac);
        SolveOptions so;
        std::vector<cplx> pair;
        for (double sgn : {1.0, -1.0})
            if (auto r = newton_boundary(map, c.image + delta, Q + sgn * eps, so)) pair.push_back(*r);
        if (pair.size() == 2 && std::abs(pair[0] - pair[1]) > 1e-9) c.branch_pair = pair;
    }
    return c;
}

template <TrajectoryMap M>
std::vector<CausticPoint> find_caustics(const M& map, const Rect& window, const CausticOptions& o = {}) {
    std::vector<cplx> seeds = seed_grid(window, o.resolution);
    std::vector<std::optional<cplx>> hits(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        auto r = newton_caustic(map, seeds[i], o);
        if (r && window.contains(*r)) hits[i] = r;
    });
    std::vector<cplx> pts;
    for (auto& h : hits)
        if (h) pts.push_back(*h);
    pts = dedupe_sorted(std::move(pts), o.dedupe);
    std::vector<CausticPoint> out(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) { out[i] = describe_caustic(map, pts[i], o); });
    return out;
}

// ---------------------------------------------------------------- Stokes lines

enum class LineEnd { arc_limit, window, singularity, caustic, lost, anti_stokes };

inline const char* to_string(LineEnd e) {
    switch (e) {
        case LineEnd::arc_limit: return "arc-limit";
        case LineEnd::window: return "window";
        case LineEnd::singularity: return "singularity";
        case LineEnd::caustic: return "caustic";
        case LineEnd::lost: return "lost";
        case LineEnd::anti_stokes: return "anti-stokes";
    }
    return "?";
}

struct StokesLine {
    int ray{0};
    double theta0{0};            // start direction at the caustic
    std::vector<cplx> points;    // subdominant branch, Q'-plane
    std::vector<cplx> partner;   // dominant branch, Q'-plane
    std::vector<cplx> exit;      // common exit value Q''
    std::vector<cplx> dF;        // unwrapped F(point) - F(partner)
    LineEnd end{LineEnd::arc_limit};
    std::optional<cplx> zero;    // Z-zero reached at a singular end
    double arc_length{0};
};

struct StokesOptions {
    double step{0.02};             // in units of sqrt(hbar)
    double arc_length_limit{8.0};  // in units of sqrt(hbar)
    double corrector_tol{1e-8};
    Rect window{-1e300, 1e300, -1e300, 1e300};
    double singular_stop{0.5};     // stop when a trajectory point is this many steps from a zero
};

namespace detail {

struct PairState {
    cplx Z, P;
    MapPoint mz, mp;
    cplx dF;   // unwrapped
    cplx dFp;  // d(ΔF)/dZ
};

template <TrajectoryMap M>
std::optional<cplx> solve_partner(const M& map, cplx target, cplx guess) {
    cplx P = guess;
    for (int it = 0; it < 30; ++it) {
        MapPoint m = map.evaluate(P, 1.0);
        if (!m.ok() || m.jac == cplx(0.0)) return std::nullopt;
        cplx r = m.Qf - target;
        if (std::abs(r) < 1e-13 * (1.0 + std::abs(target))) return P;
        P -= r / m.jac;
        if (!finite(P)) return std::nullopt;
    }
    MapPoint m = map.evaluate(P, 1.0);
    if (m.ok() && std::abs(m.Qf - target) < 1e-10 * (1.0 + std::abs(target))) return P;
    return std::nullopt;
}

// Evaluate the pair at Z with a partner guess; dF is unwrapped against ref by
// multiples of 2π hbar.
template <TrajectoryMap M>
std::optional<PairState> pair_at(const M& map, cplx Z, cplx Pguess, cplx ref) {
    PairState s;
    s.Z = Z;
    s.mz = map.evaluate(Z, 1.0);
    if (!s.mz.ok()) return std::nullopt;
    auto P = solve_partner(map, s.mz.Qf, Pguess);
    if (!P) return std::nullopt;
    s.P = *P;
    s.mp = map.evaluate(s.P, 1.0);
    if (!s.mp.ok()) return std::nullopt;
    cplx raw = s.mz.F_hol() - s.mp.F_hol();
    double period = 2.0 * kPi * map.hbar();
    double n = std::round((ref.real() - raw.real()) / period);
    s.dF = raw + n * period;
    s.dFp = s.mz.jac * (s.mz.Pf - s.mp.Pf);
    return s;
}

// Move Z along the gradient of Re ΔF until |Re ΔF| < tol.
template <TrajectoryMap M>
std::optional<PairState> correct(const M& map, PairState s, double tol) {
    for (int it = 0; it < 12; ++it) {
        double g = s.dF.real();
        if (std::abs(g) < tol) return s;
        double n2 = std::norm(s.dFp);
        if (n2 == 0.0 || !std::isfinite(n2)) return std::nullopt;
        cplx dz = -g * std::conj(s.dFp) / n2;
        cplx P_guess = s.P + dz * s.mz.jac / s.mp.jac;
        auto ns = pair_at(map, s.Z + dz, P_guess, s.dF + s.dFp * dz);
        if (!ns) return std::nullopt;
        s = *ns;
    }
    return std::abs(s.dF.real()) < tol ? std::optional<PairState>(s) : std::nullopt;
}

// Where the segment a→b leaves the rectangle (a inside).
inline cplx clip_to(const Rect& r, cplx a, cplx b) {
    double t = 1.0;
    auto upd = [&](double av, double bv, double lim) {
        if (bv != av) {
            double tt = (lim - av) / (bv - av);
            if (tt >= 0.0 && tt < t) t = tt;
        }
    };
    if (b.real() < r.re_min) upd(a.real(), b.real(), r.re_min);
    if (b.real() > r.re_max) upd(a.real(), b.real(), r.re_max);
    if (b.imag() < r.im_min) upd(a.imag(), b.imag(), r.im_min);
    if (b.imag() > r.im_max) upd(a.imag(), b.imag(), r.im_max);
    return a + t * (b - a);
}

}  // namespace detail

// Start radius and directions of the three subdominant rays from the cubic normal form.
template <TrajectoryMap M>
std::optional<std::pair<cplx, std::array<double, 3>>> fold_directions(const M& map, const CausticPoint& c,
                                                                      double r0) {
    // ΔF(δ)/δ³ from a probe displacement along the real axis, averaged with the
    // opposite displacement to cancel the quartic term.
    cplx Cs[2];
    int k = 0;
    for (double sgn : {1.0, -1.0}) {
        cplx d = sgn * r0;
        auto s = detail::pair_at(map, c.Qprime + d, c.Qprime - d, cplx(0.0));
        if (!s || std::abs(s->P - s->Z) < 0.5 * r0) return std::nullopt;
        Cs[k++] = s->dF / (d * d * d);
    }
    cplx C = 0.5 * (Cs[0] + Cs[1]);
    std::array<double, 3> th{};
    double base = (0.5 * kPi - std::arg(C)) / 3.0;
    for (int j = 0; j < 3; ++j) th[j] = base + 2.0 * kPi * j / 3.0;
    return std::make_pair(C, th);
}

template <TrajectoryMap M>
StokesLine trace_ray(const CausticPoint& c, const M& map, double theta0, int ray, const StokesOptions& o) {
    StokesLine L;
    L.ray = ray;
    L.theta0 = theta0;
    double sh = std::sqrt(map.hbar());
    double h_nom = o.step * sh;
    double limit = o.arc_length_limit * sh;
    cplx dir = std::polar(1.0, theta0);

    L.points.push_back(c.Qprime);
    L.partner.push_back(c.Qprime);
    L.exit.push_back(c.image);
    L.dF.push_back(0.0);

    auto s0 = detail::pair_at(map, c.Qprime + h_nom * dir, c.Qprime - h_nom * dir, cplx(0.0));
    if (!s0 || std::abs(s0->P - s0->Z) < 0.5 * h_nom) { L.end = LineEnd::lost; return L; }
    auto sc = detail::correct(map, *s0, o.corrector_tol);
    if (!sc) { L.end = LineEnd::lost; return L; }
    detail::PairState s = *sc;
    auto push = [&](const detail::PairState& st) {
        L.arc_length += std::abs(st.Z - L.points.back());
        L.points.push_back(st.Z);
        L.partner.push_back(st.P);
        L.exit.push_back(st.mz.Qf);
        L.dF.push_back(st.dF);
    };
    push(s);
    dir = s.Z - c.Qprime;
    dir /= std::abs(dir);

    double h = h_nom;
    while (true) {
        if (L.arc_length >= limit) { L.end = LineEnd::arc_limit; break; }
        if (!o.window.contains(s.Z)) { L.end = LineEnd::window; break; }
        ZeroProximity zp = map.zero_proximity(s.Z);
        if (zp.distance < o.singular_stop * h_nom) {
            L.end = LineEnd::singularity;
            L.zero = zp.q0;
            break;
        }
        if (s.dF.imag() <= 0.0) { L.end = LineEnd::anti_stokes; break; }
        if (std::abs(s.Z - s.P) < 0.5 * h_nom && L.arc_length > 2.0 * h_nom) { L.end = LineEnd::caustic; break; }

        cplx t = I * std::conj(s.dFp);
        double tn = std::abs(t);
        if (tn == 0.0 || !std::isfinite(tn)) { L.end = LineEnd::lost; break; }
        t /= tn;
        if ((t * std::conj(dir)).real() < 0.0) t = -t;

        bool done = false;
        while (true) {
            cplx dz = h * t;
            cplx Pg = s.P + dz * s.mz.jac / s.mp.jac;
            auto pred = detail::pair_at(map, s.Z + dz, Pg, s.dF + s.dFp * dz);
            std::optional<detail::PairState> corr;
            if (pred) corr = detail::correct(map, *pred, o.corrector_tol);
            bool good = false;
            if (corr) {
                cplx moved = corr->Z - s.Z;
                double turn = std::abs(std::arg(moved * std::conj(t)));
                // The partner may move fast, but it has to move where the tangent map says.
                cplx expect = s.P + moved * s.mz.jac / s.mp.jac;
                bool partner_ok = std::abs(corr->P - expect) < 0.3 * std::abs(corr->P - s.P) + 2.0 * h;
                good = turn < 0.35 && std::abs(moved) > 0.2 * h && partner_ok;
            }
            if (good) {
                dir = corr->Z - s.Z;
                dir /= std::abs(dir);
                s = *corr;
                if (!o.window.contains(s.Z)) {
                    cplx Zc = detail::clip_to(o.window, L.points.back(), s.Z);
                    auto clipped = detail::pair_at(map, Zc, s.P + (Zc - s.Z) * s.mz.jac / s.mp.jac, s.dF);
                    if (clipped) {
                        push(*clipped);
                    } else {
                        detail::PairState c2 = s;
                        c2.Z = Zc;
                        push(c2);
                    }
                    L.end = LineEnd::window;
                    done = true;
                } else {
                    push(s);
                }
                h = std::min(h * 1.5, h_nom);
                break;
            }
            h *= 0.5;
            if (h < 1e-6 * h_nom) {
                ZeroProximity zq = map.zero_proximity(s.Z);
                if (zq.distance < 5.0 * h_nom) {
                    L.end = LineEnd::singularity;
                    L.zero = zq.q0;
                } else {
                    L.end = LineEnd::lost;
                }
                done = true;
                break;
            }
        }
        if (done) break;
    }
    return L;
}

template <TrajectoryMap M>
std::vector<StokesLine> trace_stokes(const CausticPoint& c, const M& map, const StokesOptions& o = {}) {
    double r0 = o.step * std::sqrt(map.hbar());
    auto fd = fold_directions(map, c, r0);
    if (!fd) throw BranchTrackingLost("branch pair not resolvable near caustic");
    std::vector<StokesLine> out;
    for (int j = 0; j < 3; ++j) out.push_back(trace_ray(c, map, fd->second[j], j, o));
    return out;
}

// ---------------------------------------------------------------- regions

inline bool point_in_polygon(const std::vector<cplx>& poly, cplx z) {
    bool in = false;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        cplx a = poly[i], b = poly[j];
        if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
            double x = a.real() + (z.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
            if (z.real() < x) in = !in;
        }
    }
    return in;
}

enum class RegionRule { singular_pair, away_from_anchor };

struct UnphysicalRegion {
    int caustic{-1};
    int ray_a{-1}, ray_b{-1};  // sector runs counterclockwise from ray_a to ray_b
    RegionRule rule{RegionRule::away_from_anchor};
    std::vector<cplx> polygon;
    bool valid{false};

    bool contains(cplx z) const { return valid && point_in_polygon(polygon, z); }
};

namespace detail {

// Perimeter parameter in [0,4): bottom edge left→right, right edge up, top edge
// right→left, left edge down. Increasing parameter runs counterclockwise.
inline double perimeter_param(const Rect& r, cplx z) {
    double dx0 = std::abs(z.imag() - r.im_min), dx1 = std::abs(z.real() - r.re_max);
    double dx2 = std::abs(z.imag() - r.im_max), dx3 = std::abs(z.real() - r.re_min);
    double m = std::min({dx0, dx1, dx2, dx3});
    if (m == dx0) return std::clamp((z.real() - r.re_min) / r.width(), 0.0, 1.0 - 1e-15);
    if (m == dx1) return 1.0 + std::clamp((z.imag() - r.im_min) / r.height(), 0.0, 1.0 - 1e-15);
    if (m == dx2) return 2.0 + std::clamp((r.re_max - z.real()) / r.width(), 0.0, 1.0 - 1e-15);
    return 3.0 + std::clamp((r.im_max - z.imag()) / r.height(), 0.0, 1.0 - 1e-15);
}

inline cplx perimeter_corner(const Rect& r, int k) {
    switch (k % 4) {
        case 0: return {r.re_max, r.im_min};
        case 1: return {r.re_max, r.im_max};
        case 2: return {r.re_min, r.im_max};
        default: return {r.re_min, r.im_min};
    }
}

// Corners visited walking the perimeter from a to b, counterclockwise when ccw.
inline std::vector<cplx> perimeter_walk(const Rect& r, cplx a, cplx b, bool ccw) {
    double ta = perimeter_param(r, a), tb = perimeter_param(r, b);
    std::vector<cplx> out;
    if (ccw) {
        double span = std::fmod(tb - ta + 4.0, 4.0);
        int first = static_cast<int>(std::floor(ta)) + 1;
        for (int k = first; k <= static_cast<int>(std::floor(ta + span)); ++k) out.push_back(perimeter_corner(r, k - 1));
    } else {
        double span = std::fmod(ta - tb + 4.0, 4.0);
        int first = static_cast<int>(std::floor(ta));
        for (int k = first; k > static_cast<int>(std::floor(ta - span)); --k) out.push_back(perimeter_corner(r, ((k - 1) % 4 + 4) % 4));
    }
    return out;
}

}  // namespace detail

inline UnphysicalRegion unphysical_region(int index, const CausticPoint& c, const std::vector<StokesLine>& lines,
                                          cplx anchor, const Rect& window) {
    UnphysicalRegion R;
    R.caustic = index;
    if (lines.size() != 3) return R;
    int sector = -1;
    // Two lines running into the same zero of Z bound the region.
    for (int a = 0; a < 3 && sector < 0; ++a) {
        int b = (a + 1) % 3;
        const auto &la = lines[a], &lb = lines[b];
        if (la.end == LineEnd::singularity && lb.end == LineEnd::singularity && la.zero && lb.zero &&
            std::abs(*la.zero - *lb.zero) < 1e-6) {
            sector = a;
            R.rule = RegionRule::singular_pair;
        }
    }
    if (sector < 0) {
        double phi = std::arg(c.Qprime - anchor);
        for (int a = 0; a < 3; ++a) {
            double d = std::fmod(phi - lines[a].theta0 + 8.0 * kPi, 2.0 * kPi);
            if (d < 2.0 * kPi / 3.0) sector = a;
        }
        if (sector < 0) sector = 0;
        R.rule = RegionRule::away_from_anchor;
    }
    R.ray_a = sector;
    R.ray_b = (sector + 1) % 3;
    const StokesLine& la = lines[R.ray_a];
    const StokesLine& lb = lines[R.ray_b];
    if (la.points.size() < 2 || lb.points.size() < 2) return R;

    double r_test = 2.0 * std::abs(la.points[1] - c.Qprime);
    cplx probe = c.Qprime + std::polar(r_test, la.theta0 + kPi / 3.0);

    auto build = [&](const std::vector<cplx>& closure) {
        std::vector<cplx> poly(la.points.begin(), la.points.end());
        poly.insert(poly.end(), closure.begin(), closure.end());
        for (auto it = lb.points.rbegin(); it != lb.points.rend(); ++it) poly.push_back(*it);
        return poly;
    };
    std::vector<std::vector<cplx>> candidates;
    if (la.end == LineEnd::window && lb.end == LineEnd::window) {
        candidates.push_back(build(detail::perimeter_walk(window, la.points.back(), lb.points.back(), true)));
        candidates.push_back(build(detail::perimeter_walk(window, la.points.back(), lb.points.back(), false)));
    } else {
        candidates.push_back(build({}));
    }
    for (auto& poly : candidates) {
        if (point_in_polygon(poly, probe)) {
            R.polygon = std::move(poly);
            R.valid = true;
            break;
        }
    }
    return R;
}

struct StokesAnalysis {
    std::vector<CausticPoint> caustics;
    std::vector<std::vector<StokesLine>> lines;  // per caustic; empty if untraceable
    std::vector<UnphysicalRegion> regions;       // per caustic
    std::vector<std::string> warnings;
};

template <TrajectoryMap M>
StokesAnalysis analyze_stokes(const M& map, std::vector<CausticPoint> caustics, const StokesOptions& so) {
    StokesAnalysis A;
    A.caustics = std::move(caustics);
    A.lines.resize(A.caustics.size());
    A.regions.resize(A.caustics.size());
    std::vector<std::string> warn(A.caustics.size());
    cplx anchor = label_Q(map.entrance());
    parallel_for(A.caustics.size(), [&](std::size_t i) {
        try {
            A.lines[i] = trace_stokes(A.caustics[i], map, so);
            A.regions[i] = unphysical_region(static_cast<int>(i), A.caustics[i], A.lines[i], anchor, so.window);
        } catch (const BranchTrackingLost& e) {
            warn[i] = "caustic " + std::to_string(i) + ": " + e.what();
            A.regions[i].caustic = static_cast<int>(i);
        }
    });
    for (auto& w : warn)
        if (!w.empty()) A.warnings.push_back(w);
    return A;
}

template <TrajectoryMap M>
StokesAnalysis analyze_stokes(const M& map, const Rect& window, const CausticOptions& co = {},
                              StokesOptions so = {}) {
    so.window = window;
    return analyze_stokes(map, find_caustics(map, window, co), so);
}

// Marks a branch unphysical when its initial parameter lies inside any caustic's
// unphysical region; flags branches close to a v-PSC.
inline void filter_branches(std::vector<SaddleBranch>& branches, const StokesAnalysis& A, double near_radius) {
    for (auto& b : branches) {
        for (const auto& R : A.regions)
            if (R.contains(b.Qprime)) b.physical = false;
        for (const auto& c : A.caustics)
            if (c.kind == CausticKind::v_psc && std::abs(c.Qprime - b.Qprime) < near_radius) b.near_v_psc = true;
    }
}

}  // namespace psc
