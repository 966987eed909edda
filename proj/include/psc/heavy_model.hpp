// heavy_model.hpp: infinitely heavy particle on two linearly crossing levels
//
// H = -hbar sigma_z F q + hbar sigma_x J with no kinetic term, so q is conserved and
// the kernel is a one-dimensional integral
//   K = (pi hbar)^(-1/2) ∫ dx exp(i Phi(x)/hbar),
//   Phi(x) = S(x) + (i/2)(x-q')² + (i/2)(x-q'')² + p'(x-q'/2) - p''(x-q''/2),
// with S = -i hbar ln Z. As a map, Q' fixes q̄ = (Q' + iP')/√2 and the momentum
// picks up S'(q̄); Phi'(q̄) = 0 is the Klauder boundary condition and
// dQ''/dQ' = -i Phi''(q̄)/2.

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "psc/caustics_stokes.hpp"
#include "psc/complex_dynamics.hpp"
#include "psc/grid_field.hpp"
#include "psc/imf_grid.hpp"
#include "psc/spin_algebra.hpp"

namespace psc {

struct HeavyExponent {
    CoherentLabel entrance, exit;
    HeavyParams params;
    SpinState spin_in, spin_out;

    // Phi and its first three derivatives; throws at a zero of Z.
    Jet phi(cplx x) const {
        LogJet S = eff_action_heavy(x, spin_in, spin_out, params);
        Jet r;
        r.v = S.v + 0.5 * I * (x - entrance.q) * (x - entrance.q) + 0.5 * I * (x - exit.q) * (x - exit.q) +
              entrance.p * (x - 0.5 * entrance.q) - exit.p * (x - 0.5 * exit.q);
        r.d1 = S.d1 + I * (x - entrance.q) + I * (x - exit.q) + entrance.p - exit.p;
        r.d2 = S.d2 + 2.0 * I;
        r.d3 = S.d3;
        return r;
    }
};

class HeavyMap {
public:
    HeavyMap(CoherentLabel entrance, SpinState in, SpinState out, HeavyParams p, double zero_half_width = 6.0)
        : in_(entrance), s_in_(in), s_out_(out), p_(p) {
        zeros_ = find_z_zeros_heavy(Rect::around(cplx(entrance.q, 0.0), zero_half_width), in, out, p, 60);
    }

    MapPoint evaluate(cplx Qp, double lam = 1.0) const {
        MapPoint r;
        ComplexPoint z0 = initial_point(Qp, in_);
        Jet z = influence_heavy_jet(z0.q, s_in_, s_out_, p_);
        if (std::abs(z.v) < kZeroTol) { r.status = MapStatus::zero_hit; return r; }
        LogJet S = detail::scaled_log(z, -I * p_.hbar);
        r.end = {z0.q, z0.p + lam * S.d1};
        KlauderVars k = to_klauder(r.end);
        r.Qf = k.Q;
        r.Pf = k.P;
        r.jac = 1.0 - 0.5 * I * lam * S.d2;
        r.action = lam * S.v + entrance_terms(z0.q, in_);
        if (!finite(r.Qf) || !finite(r.jac) || !finite(r.action)) r.status = MapStatus::overflow;
        return r;
    }

    CoherentLabel entrance() const { return in_; }
    double hbar() const { return p_.hbar; }
    const HeavyParams& params() const { return p_; }
    const SpinState& spin_in() const { return s_in_; }
    const SpinState& spin_out() const { return s_out_; }
    const std::vector<cplx>& zeros() const { return zeros_; }

    ZeroProximity zero_proximity(cplx Qp) const {
        ZeroProximity zp;
        cplx q = initial_point(Qp, in_).q;
        for (cplx z : zeros_) {
            double d = std::abs(q - z);
            if (d < zp.distance) zp = {d, z, 0};
        }
        return zp;
    }

    // Q' whose trajectory starts at position q.
    cplx preimage(cplx q) const { return kSqrt2 * q - I * label_P(in_); }

private:
    CoherentLabel in_;
    SpinState s_in_, s_out_;
    HeavyParams p_;
    std::vector<cplx> zeros_;
};

namespace detail {

// Gauss-Kronrod (15/31) with bisection until each panel's error estimate is below
// its share of the absolute tolerance.
template <class Fn>
cplx integrate_absolute(const Fn& f, double a, double b, double tol, int max_depth, int initial_panels = 1) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    struct Panel { double lo, hi; int depth; };
    std::vector<Panel> stack;
    for (int k = initial_panels - 1; k >= 0; --k)
        stack.push_back({a + (b - a) * k / initial_panels, a + (b - a) * (k + 1) / initial_panels, 0});
    cplx sum = 0.0;
    while (!stack.empty()) {
        Panel pn = stack.back();
        stack.pop_back();
        double err = 0.0;
        cplx v = GK::integrate(f, pn.lo, pn.hi, 0, 0.0, &err);
        double share = tol * (pn.hi - pn.lo) / (b - a);
        if (err <= share) {
            sum += v;
            continue;
        }
        if (pn.depth >= max_depth)
            throw QuadratureFailure("quadrature depth limit reached on [" + std::to_string(pn.lo) + ", " +
                                    std::to_string(pn.hi) + "]");
        double mid = 0.5 * (pn.lo + pn.hi);
        stack.push_back({mid, pn.hi, pn.depth + 1});
        stack.push_back({pn.lo, mid, pn.depth + 1});
    }
    return sum;
}

}  // namespace detail

enum class PhaseConvention { half_shift, full_shift };  // p(x - q/2) or p(x - q)

inline cplx exact_kernel(const CoherentLabel& in, const CoherentLabel& out, const SpinState& s_in,
                         const SpinState& s_out, const HeavyParams& p,
                         PhaseConvention pc = PhaseConvention::half_shift) {
    const double h = p.hbar;
    const double norm = 1.0 / std::sqrt(kPi * h);
    const double w = pc == PhaseConvention::half_shift ? 0.5 : 1.0;
    auto f = [&](double x) -> cplx {
        cplx Z = influence_heavy(x, s_in, s_out, p);
        double g = -((x - in.q) * (x - in.q) + (x - out.q) * (x - out.q)) / (2.0 * h);
        double ph = (in.p * (x - w * in.q) - out.p * (x - w * out.q)) / h;
        return norm * Z * std::exp(cplx(g, ph));
    };
    double a = std::min(in.q, out.q) - 8.0 * std::sqrt(h);
    double b = std::max(in.q, out.q) + 8.0 * std::sqrt(h);
    int panels = std::max(4, static_cast<int>(std::ceil((b - a) / std::sqrt(h))));
    return detail::integrate_absolute(f, a, b, 1e-11, 12, panels);
}

struct HeavyKernelOptions {
    double eps_amp{1e-6};
    SolveOptions solve{};
    const StokesAnalysis* stokes{nullptr};  // no Stokes filtering when null
    double near_v_radius{0.3};              // in units of sqrt(hbar)
};

struct KernelResult {
    cplx value{};
    std::vector<SaddleBranch> branches;
};

template <TrajectoryMap M>
KernelResult semiclassical_sum(const M& map, const CoherentLabel& exit, const std::vector<cplx>& seeds,
                               const SolveOptions& so, const StokesAnalysis* stokes, double eps_amp,
                               double near_v_radius) {
    KernelResult r;
    r.branches = solve_boundary(map, exit, seeds, so);
    if (r.branches.empty()) throw NoRoots("no boundary root converged");
    if (stokes) filter_branches(r.branches, *stokes, near_v_radius * std::sqrt(map.hbar()));
    r.value = sum_branches(r.branches, map.hbar(), eps_amp);
    return r;
}

inline KernelResult semiclassical_kernel(const HeavyMap& map, const CoherentLabel& exit,
                                         const HeavyKernelOptions& o = {}) {
    return semiclassical_sum(map, exit, default_seeds(map, o.solve), o.solve, o.stokes, o.eps_amp, o.near_v_radius);
}

inline KernelResult semiclassical_kernel(const CoherentLabel& in, const CoherentLabel& out, const SpinState& s_in,
                                         const SpinState& s_out, const HeavyParams& p,
                                         const HeavyKernelOptions& o = {}) {
    return semiclassical_kernel(HeavyMap(in, s_in, s_out, p), out, o);
}

// Caustics and Stokes regions of the heavy map over the default seed window.
inline StokesAnalysis heavy_stokes(const HeavyMap& map, const CausticOptions& co = {}, double half_width = 4.0) {
    Rect win = Rect::around(label_Q(map.entrance()), half_width * std::sqrt(map.hbar()));
    return analyze_stokes(map, win, co);
}

struct HusimiGrids {
    GridField exact, semiclassical;
    std::vector<int> branch_counts;     // per grid point, all roots found
    std::vector<int> physical_counts;   // per grid point, roots kept in the sum
    std::size_t no_root_points{0};
};

// Exit window as a rectangle in the label plane: real part q'', imaginary part p''.
inline HusimiGrids husimi_grid(const CoherentLabel& in, const SpinState& s_in, const SpinState& s_out,
                               const HeavyParams& p, const Rect& exit_window, int resolution,
                               const HeavyKernelOptions& o = {}, bool with_semiclassical = true) {
    if (resolution < 16) throw ConfigError("husimi_grid needs at least 16 points per axis");
    HusimiGrids g;
    Axis ax = label_axis("q", exit_window.re_min, exit_window.re_max, resolution);
    Axis ay = label_axis("p", exit_window.im_min, exit_window.im_max, resolution);
    g.exact = GridField(ax, ay);
    g.exact.provenance = "exact";
    g.semiclassical = GridField(ax, ay);
    g.semiclassical.provenance = "semiclassical";
    std::size_t n = ax.size * ay.size;
    g.branch_counts.assign(n, 0);
    g.physical_counts.assign(n, 0);
    HeavyMap map(in, s_in, s_out, p);
    std::vector<cplx> seeds = default_seeds(map, o.solve);
    std::vector<char> noroot(n, 0);
    double cut = p.hbar * std::log(1.0 / o.eps_amp);
    parallel_for(n, [&](std::size_t i) {
        CoherentLabel out{ax.at(i % ax.size), ay.at(i / ax.size)};
        g.exact.values[i] = std::norm(exact_kernel(in, out, s_in, s_out, p));
        if (!with_semiclassical) return;
        try {
            KernelResult r = semiclassical_sum(map, out, seeds, o.solve, o.stokes, o.eps_amp, o.near_v_radius);
            g.semiclassical.values[i] = std::norm(r.value);
            g.branch_counts[i] = static_cast<int>(r.branches.size());
            int kept = 0;
            for (const auto& b : r.branches) kept += (b.physical && b.F.imag() <= cut);
            g.physical_counts[i] = kept;
        } catch (const NoRoots&) {
            noroot[i] = 1;
        }
    });
    for (char c : noroot) g.no_root_points += c;
    return g;
}

struct ImfLandscape {
    GridField field;                 // Im F over the Q' window; +inf where the map fails
    std::vector<cplx> zero_marks;    // Q' preimages of zeros of Z inside the window
    std::vector<CausticPoint> caustics;
};

inline ImfLandscape imf_landscape(const HeavyMap& map, const Rect& window, int resolution,
                                  std::optional<CoherentLabel> fixed_exit = {}, const CausticOptions& co = {}) {
    ImfLandscape L;
    L.field = imf_grid(map, window, resolution, fixed_exit);
    for (cplx z : map.zeros()) {
        cplx Q = map.preimage(z);
        if (window.contains(Q)) L.zero_marks.push_back(Q);
    }
    L.caustics = find_caustics(map, window, co);
    return L;
}

}  // namespace psc
