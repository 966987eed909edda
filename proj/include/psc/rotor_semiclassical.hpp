// rotor_semiclassical.hpp: complexified effective standard map for a fixed spin sequence
//
//   p̄_n = p̄_{n-1} - V_n'(q̄_{n-1}),   q̄_n = q̄_{n-1} + p̄_n,
//   V_n = i hbar ln Z_n = K cos q + i hbar ln z_n(q),
//   F = Σ_n [p̄_n²/2 - V_n(q̄_{n-1})] + (i/2)(q̄_0 - q')² + p'(q̄_0 - q'/2) + exit terms.
// F is the stationary exponent of the position-space path integral for the
// decomposed kernel; its stationarity conditions are the map plus the Klauder
// boundary conditions.

#pragma once

#include "psc/caustics_stokes.hpp"
#include "psc/complex_dynamics.hpp"
#include "psc/heavy_model.hpp"
#include "psc/imf_grid.hpp"
#include "psc/spin_algebra.hpp"

namespace psc {

struct EffectiveTrajectory {
    std::vector<ComplexPoint> points;   // n = 0..N
    std::vector<ComplexPoint> tangent;  // (δq_n, δp_n)
    cplx action{};                      // entrance terms + bulk
    std::vector<SpinState> spins;
};

// Zeros of one kick's spin factor over a period strip; the set repeats with period 2π.
class PeriodicZeroSet {
public:
    PeriodicZeroSet() = default;
    PeriodicZeroSet(const SpinState& in, const SpinState& out, const KickParams& p, double im_half = 5.0) {
        zeros_ = find_z_zeros_kick(Rect{-kPi - 0.1, kPi + 0.1, -im_half, im_half}, in, out, p, 60);
        std::vector<cplx> reduced;
        for (cplx z : zeros_) reduced.push_back({reduce(z.real()), z.imag()});
        zeros_ = dedupe_sorted(std::move(reduced), 1e-6);
    }

    const std::vector<cplx>& zeros() const { return zeros_; }

    // Nearest zero image to q, returned at the winding closest to q.
    std::pair<double, cplx> nearest(cplx q) const {
        double best = std::numeric_limits<double>::infinity();
        cplx at{};
        double base = q.real() - reduce(q.real());
        for (cplx z : zeros_)
            for (int w = -1; w <= 1; ++w) {
                cplx img(z.real() + base + 2.0 * kPi * w, z.imag());
                double d = std::abs(q - img);
                if (d < best) { best = d; at = img; }
            }
        return {best, at};
    }

private:
    static double reduce(double x) { return x - 2.0 * kPi * std::floor((x + kPi) / (2.0 * kPi)); }
    std::vector<cplx> zeros_;
};

class RotorMap {
public:
    RotorMap(CoherentLabel entrance, std::vector<SpinState> seq, KickParams p)
        : in_(entrance), seq_(std::move(seq)), p_(p) {
        if (seq_.empty()) throw ConfigError("spin sequence needs at least one entry");
        for (std::size_t n = 1; n < seq_.size(); ++n) zeros_.emplace_back(seq_[n - 1], seq_[n], p_);
    }

    int steps() const { return static_cast<int>(seq_.size()) - 1; }

    MapPoint evaluate(cplx Qp, double lam = 1.0) const {
        MapPoint r;
        ComplexPoint z = initial_point(Qp, in_);
        cplx q = z.q, p = z.p;
        cplx dq = 1.0 / kSqrt2, dp = I / kSqrt2;
        cplx F = entrance_terms(q, in_);
        for (int n = 1; n <= steps(); ++n) {
            Jet zs = kick_spin_factor_jet(q, seq_[n - 1], seq_[n], p_);
            if (!finite(zs.v) || !finite(zs.d1) || !finite(zs.d2)) { r.status = MapStatus::overflow; return r; }
            if (std::abs(zs.v) < kZeroTol) { r.status = MapStatus::zero_hit; return r; }
            LogJet V = detail::scaled_log(zs, I * p_.hbar);
            cplx c = std::cos(q), s = std::sin(q);
            cplx v0 = V.v + p_.K * c, v1 = V.d1 - p_.K * s, v2 = V.d2 - p_.K * c;
            p -= lam * v1;
            dp -= lam * v2 * dq;
            q += p;
            dq += dp;
            F += 0.5 * p * p - lam * v0;
        }
        r.end = {q, p};
        KlauderVars k = to_klauder(r.end);
        r.Qf = k.Q;
        r.Pf = k.P;
        r.jac = (dq - I * dp) / kSqrt2;
        r.action = F;
        if (!finite(r.Qf) || !finite(r.jac) || !finite(r.action) || !finite(r.Pf)) r.status = MapStatus::overflow;
        return r;
    }

    CoherentLabel entrance() const { return in_; }
    double hbar() const { return p_.hbar; }
    const KickParams& params() const { return p_; }
    const std::vector<SpinState>& spins() const { return seq_; }
    const PeriodicZeroSet& zero_set(int step) const { return zeros_.at(static_cast<std::size_t>(step - 1)); }

    // Distance from the kick positions q̄_0..q̄_{N-1} to the zeros of the kick applied there.
    ZeroProximity zero_proximity(cplx Qp) const {
        ZeroProximity zp;
        ComplexPoint z = initial_point(Qp, in_);
        cplx q = z.q, p = z.p;
        for (int n = 1; n <= steps(); ++n) {
            auto [d, at] = zeros_[n - 1].nearest(q);
            if (d < zp.distance) zp = {d, at, n};
            Jet zs = kick_spin_factor_jet(q, seq_[n - 1], seq_[n], p_);
            if (!finite(zs.v) || std::abs(zs.v) < kZeroTol) break;
            cplx v1 = I * p_.hbar * zs.d1 / zs.v - p_.K * std::sin(q);
            p -= v1;
            q += p;
            if (!finite(q)) break;
        }
        return zp;
    }

private:
    CoherentLabel in_;
    std::vector<SpinState> seq_;
    KickParams p_;
    std::vector<PeriodicZeroSet> zeros_;
};

inline EffectiveTrajectory propagate_effective(cplx Qp, const CoherentLabel& in, const std::vector<SpinState>& seq,
                                               const KickParams& p) {
    if (seq.empty()) throw ConfigError("spin sequence needs at least one entry");
    EffectiveTrajectory T;
    T.spins = seq;
    ComplexPoint z = initial_point(Qp, in);
    ComplexPoint d{1.0 / kSqrt2, I / kSqrt2};
    T.points.push_back(z);
    T.tangent.push_back(d);
    T.action = entrance_terms(z.q, in);
    for (std::size_t n = 1; n < seq.size(); ++n) {
        if (std::abs(kick_spin_factor_jet(z.q, seq[n - 1], seq[n], p).v) < 1e-10) throw ZeroOfInfluenceFunctional(z.q);
        LogJet V = eff_potential_kick(z.q, seq[n - 1], seq[n], p);
        z.p -= V.d1;
        d.p -= V.d2 * d.q;
        z.q += z.p;
        d.q += d.p;
        T.action += 0.5 * z.p * z.p - V.v;
        T.points.push_back(z);
        T.tangent.push_back(d);
    }
    return T;
}

struct RotorKernelOptions {
    double eps_amp{1e-6};
    SolveOptions solve{};
    const StokesAnalysis* stokes{nullptr};
    double near_v_radius{0.3};
};

inline KernelResult semiclassical_decomposed_kernel(const RotorMap& map, const CoherentLabel& exit,
                                                    const RotorKernelOptions& o = {}) {
    return semiclassical_sum(map, exit, default_seeds(map, o.solve), o.solve, o.stokes, o.eps_amp, o.near_v_radius);
}

inline KernelResult semiclassical_decomposed_kernel(const CoherentLabel& in, const CoherentLabel& exit,
                                                    const std::vector<SpinState>& seq, const KickParams& p,
                                                    const RotorKernelOptions& o = {}) {
    return semiclassical_decomposed_kernel(RotorMap(in, seq, p), exit, o);
}

// The kicked map folds far from the anchor, so the default window is wider than the heavy one.
inline StokesAnalysis rotor_stokes(const RotorMap& map, CausticOptions co = {}, double half_width = 10.0) {
    if (co.resolution < 80) co.resolution = 80;
    Rect win = Rect::around(label_Q(map.entrance()), half_width * std::sqrt(map.hbar()));
    return analyze_stokes(map, win, co);
}

struct DomainD {
    Rect window;
    int resolution{0};
    double cutoff{0};
    std::vector<char> mask;
    GridField imf;
    double area{0};

    bool inside(std::size_t i) const { return mask[i] != 0; }
};

// Half-width 3 sqrt(hbar) around the real anchor.
inline Rect default_domain_window(const CoherentLabel& in, double hbar, double half = 3.0) {
    return Rect::around(label_Q(in), half * std::sqrt(hbar));
}

template <TrajectoryMap M>
DomainD domain_D(const M& map, const Rect& window, int resolution, double cutoff,
                 std::optional<CoherentLabel> fixed_exit = {}) {
    DomainD D;
    D.window = window;
    D.resolution = resolution;
    D.cutoff = cutoff;
    D.imf = imf_grid(map, window, resolution, fixed_exit);
    D.mask.resize(D.imf.values.size());
    std::size_t count = 0;
    for (std::size_t i = 0; i < D.mask.size(); ++i) {
        D.mask[i] = D.imf.values[i].real() <= cutoff ? 1 : 0;
        count += D.mask[i];
    }
    D.area = static_cast<double>(count) * D.imf.x.spacing() * D.imf.y.spacing();
    return D;
}

// Im F of a single Q' with the induced exit label; +inf where the map fails.
template <TrajectoryMap M>
double induced_imf(const M& map, cplx Qp) {
    MapPoint m = map.evaluate(Qp, 1.0);
    if (!m.ok()) return std::numeric_limits<double>::infinity();
    double v = m.F_induced().imag();
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

inline std::vector<SpinState> parse_spin_sequence(const std::string& s) {
    std::vector<SpinState> out;
    for (char c : s) {
        if (c == 'u' || c == 'U' || c == '+') out.push_back(SpinState::spin_up());
        else if (c == 'd' || c == 'D' || c == '-') out.push_back(SpinState::spin_down());
        else throw ConfigError(std::string("bad spin symbol '") + c + "'");
    }
    if (out.empty()) throw ConfigError("empty spin sequence");
    return out;
}

}  // namespace psc
