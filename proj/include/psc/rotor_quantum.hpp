// rotor_quantum.hpp: split-step evolution of the spin-kicked rotor
//
// One period applies the kick exp(-i V(q)/hbar) pointwise, then the free drift
// exp(-i p²/(2 hbar)) in momentum space. The same grid machinery runs on the
// rotor [0, 2π) or on a finite stretch of the line.

#pragma once

#include <cstdio>
#include <fftw3.h>

#include <memory>
#include <mutex>

#include "psc/complex_dynamics.hpp"
#include "psc/spin_algebra.hpp"

namespace psc {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

}  // namespace detail

// In-place complex DFT of fixed length; owns its FFTW plans and buffer.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
        buf_ = fftw_alloc_complex(n);
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }

    // Unnormalized forward transform: sum_j v_j exp(-2πi jm/n).
    void forward(std::vector<cplx>& v) { run(v, fwd_, 1.0); }
    // Inverse including the 1/n factor.
    void inverse(std::vector<cplx>& v) { run(v, bwd_, 1.0 / static_cast<double>(n_)); }

private:
    void run(std::vector<cplx>& v, fftw_plan plan, double scale) {
        static_assert(sizeof(cplx) == sizeof(fftw_complex));
        std::copy(v.begin(), v.end(), reinterpret_cast<cplx*>(buf_));
        fftw_execute(plan);
        const cplx* b = reinterpret_cast<const cplx*>(buf_);
        for (std::size_t i = 0; i < n_; ++i) v[i] = scale * b[i];
    }

    std::size_t n_;
    fftw_complex* buf_{nullptr};
    fftw_plan fwd_{nullptr}, bwd_{nullptr};
};

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

struct SpinorField {
    double x_min{0.0};
    double length{2.0 * kPi};
    double hbar{0.25};
    std::vector<cplx> up, down;

    std::size_t size() const { return up.size(); }
    double dx() const { return length / static_cast<double>(size()); }
    double x(std::size_t j) const { return x_min + dx() * static_cast<double>(j); }
    // Momentum of FFT bin m (signed wavenumber times hbar).
    double momentum(std::size_t m) const {
        long n = static_cast<long>(size());
        long k = static_cast<long>(m) < n / 2 ? static_cast<long>(m) : static_cast<long>(m) - n;
        return hbar * 2.0 * kPi * static_cast<double>(k) / length;
    }
    double norm() const {
        double s = 0.0;
        for (std::size_t j = 0; j < size(); ++j) s += std::norm(up[j]) + std::norm(down[j]);
        return s * dx();
    }
};

inline cplx coherent_wavefunction(double x, const CoherentLabel& l, double hbar) {
    double d = x - l.q;
    return std::pow(kPi * hbar, -0.25) * std::exp(cplx(-d * d / (2.0 * hbar), l.p * (x - 0.5 * l.q) / hbar));
}

// Coherent state on [0, 2π), periodized over neighbouring windings and renormalized.
inline SpinorField rotor_coherent_state(const CoherentLabel& l, const SpinState& s, double hbar, std::size_t M) {
    if (!is_power_of_two(M)) throw ConfigError("grid size must be a power of two");
    SpinorField f;
    f.hbar = hbar;
    f.up.assign(M, 0.0);
    f.down.assign(M, 0.0);
    int wind = 2 + static_cast<int>(std::ceil(8.0 * std::sqrt(hbar) / (2.0 * kPi)));
    for (std::size_t j = 0; j < M; ++j) {
        cplx v = 0.0;
        for (int w = -wind; w <= wind; ++w) v += coherent_wavefunction(f.x(j) + 2.0 * kPi * w, l, hbar);
        f.up[j] = v * s.up;
        f.down[j] = v * s.down;
    }
    double n = std::sqrt(f.norm());
    for (std::size_t j = 0; j < M; ++j) {
        f.up[j] /= n;
        f.down[j] /= n;
    }
    return f;
}

// Coherent state on a stretch of the line, no renormalization.
inline SpinorField line_coherent_state(const CoherentLabel& l, const SpinState& s, double hbar, double x_min,
                                       double length, std::size_t M) {
    if (!is_power_of_two(M)) throw ConfigError("grid size must be a power of two");
    SpinorField f;
    f.x_min = x_min;
    f.length = length;
    f.hbar = hbar;
    f.up.resize(M);
    f.down.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
        cplx v = coherent_wavefunction(f.x(j), l, hbar);
        f.up[j] = v * s.up;
        f.down[j] = v * s.down;
    }
    return f;
}

inline constexpr double kTailTolerance = 1e-10;

namespace detail {

// Fraction of momentum-space weight in the outer quarter of the band.
inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline double band_tail(const std::vector<cplx>& a, const std::vector<cplx>* b) {
    std::size_t n = a.size();
    double total = 0.0, tail = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        long k = static_cast<long>(m) < static_cast<long>(n / 2) ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
        double w = std::norm(a[m]) + (b ? std::norm((*b)[m]) : 0.0);
        total += w;
        if (std::labs(k) >= static_cast<long>(3 * n / 8)) tail += w;
    }
    return total > 0.0 ? tail / total : 0.0;
}

inline void drift_in_momentum(std::vector<cplx>& v, const SpinorField& f) {
    for (std::size_t m = 0; m < v.size(); ++m) {
        double p = f.momentum(m);
        v[m] *= std::exp(cplx(0.0, -p * p / (2.0 * f.hbar)));
    }
}

}  // namespace detail

// Reusable transform for one grid size.
class FloquetWorkspace {
public:
    explicit FloquetWorkspace(std::size_t M) : fft_(M) {}
    Fft& fft() { return fft_; }

private:
    Fft fft_;
};

inline void floquet_step(SpinorField& f, const KickParams& p, FloquetWorkspace& ws) {
    for (std::size_t j = 0; j < f.size(); ++j) {
        double c = std::cos(f.x(j));
        SpinMatrix U = su2_exp(p.deltaK * c, p.J, p.K * c / p.hbar);
        SpinState s = U.apply({f.up[j], f.down[j]});
        f.up[j] = s.up;
        f.down[j] = s.down;
    }
    Fft& fft = ws.fft();
    fft.forward(f.up);
    fft.forward(f.down);
    double tail = detail::band_tail(f.up, &f.down);
    if (tail > kTailTolerance)
        throw GridTooCoarse("momentum tail " + detail::sci(tail) + " at M=" + std::to_string(f.size()));
    detail::drift_in_momentum(f.up, f);
    detail::drift_in_momentum(f.down, f);
    fft.inverse(f.up);
    fft.inverse(f.down);
}

inline SpinorField floquet_step(SpinorField f, const KickParams& p) {
    FloquetWorkspace ws(f.size());
    floquet_step(f, p, ws);
    return f;
}

struct SpinObservables {
    double s_z{0}, s_x{0}, s_y{0};
    double c{0}, P{0};
    double norm{0};
};

inline SpinObservables spin_observables(const SpinorField& f) {
    double sz = 0.0, n = 0.0;
    cplx ud = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        sz += std::norm(f.up[j]) - std::norm(f.down[j]);
        n += std::norm(f.up[j]) + std::norm(f.down[j]);
        ud += std::conj(f.up[j]) * f.down[j];
    }
    double dx = f.dx();
    SpinObservables o;
    o.s_z = sz * dx;
    o.s_x = 2.0 * ud.real() * dx;
    o.s_y = 2.0 * ud.imag() * dx;
    o.c = std::hypot(o.s_x, o.s_y);
    o.P = std::sqrt(o.s_z * o.s_z + o.c * o.c);
    o.norm = n * dx;
    return o;
}

// Observables at steps 0..steps on the rotor. The grid is doubled on GridTooCoarse.
inline std::vector<SpinObservables> evolve_observables(const CoherentLabel& initial, const SpinState& spin,
                                                       const KickParams& p, int steps, std::size_t M = 512) {
    double lattice = initial.p / p.hbar;
    if (std::abs(lattice - std::round(lattice)) > 1e-9)
        throw ConfigError("initial momentum is not on the lattice hbar*Z");
    for (;;) {
        try {
            SpinorField f = rotor_coherent_state(initial, spin, p.hbar, M);
            FloquetWorkspace ws(M);
            std::vector<SpinObservables> out;
            out.reserve(static_cast<std::size_t>(steps) + 1);
            out.push_back(spin_observables(f));
            for (int n = 0; n < steps; ++n) {
                floquet_step(f, p, ws);
                out.push_back(spin_observables(f));
            }
            return out;
        } catch (const GridTooCoarse&) {
            if (M >= (1u << 16)) throw;
            M *= 2;
        }
    }
}

// Line window used by the kernel oracles: |x - q'| <= 8 sqrt(hbar) + N|p'| + 6.
inline double kernel_half_window(const CoherentLabel& in, const KickParams& p, int N) {
    return 8.0 * std::sqrt(p.hbar) + N * std::abs(in.p) + 6.0;
}

namespace detail {

inline cplx project_on_coherent(const std::vector<cplx>& psi, const SpinorField& grid, const CoherentLabel& out) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) s += std::conj(coherent_wavefunction(grid.x(j), out, grid.hbar)) * psi[j];
    return s * grid.dx();
}

inline cplx decomposed_kernel_on_grid(const CoherentLabel& in, const CoherentLabel& out,
                                      const std::vector<SpinState>& seq, const KickParams& p, std::size_t M) {
    int N = static_cast<int>(seq.size()) - 1;
    double half = kernel_half_window(in, p, N);
    SpinorField g = line_coherent_state(in, SpinState::spin_up(), p.hbar, in.q - half, 2.0 * half, M);
    std::vector<cplx> psi = g.up;
    Fft fft(M);
    for (int n = 1; n <= N; ++n) {
        for (std::size_t j = 0; j < M; ++j) psi[j] *= influence_kick(g.x(j), seq[n - 1], seq[n], p);
        fft.forward(psi);
        double tail = band_tail(psi, nullptr);
        if (tail > kTailTolerance)
            throw GridTooCoarse("momentum tail " + sci(tail) + " at M=" + std::to_string(M));
        drift_in_momentum(psi, g);
        fft.inverse(psi);
    }
    return project_on_coherent(psi, g, out);
}

}  // namespace detail

// <q''p''| Z_N ... Z_1 |q'p'> with the drift between kicks, on a line grid.
inline cplx exact_decomposed_kernel(const CoherentLabel& in, const CoherentLabel& out,
                                    const std::vector<SpinState>& seq, const KickParams& p, std::size_t M = 1024) {
    if (seq.empty()) throw ConfigError("spin sequence needs at least one entry");
    if (!is_power_of_two(M)) throw ConfigError("grid size must be a power of two");
    for (;;) {
        try {
            return detail::decomposed_kernel_on_grid(in, out, seq, p, M);
        } catch (const GridTooCoarse&) {
            if (M >= (1u << 20)) throw;
            M *= 2;
        }
    }
}

// <q''p'', s_out| U^N |q'p', s_in> from the full spinor evolution on a line grid.
inline cplx full_line_kernel(const CoherentLabel& in, const CoherentLabel& out, const SpinState& s_in,
                             const SpinState& s_out, const KickParams& p, int N, std::size_t M = 1024) {
    double half = kernel_half_window(in, p, N);
    SpinorField f = line_coherent_state(in, s_in, p.hbar, in.q - half, 2.0 * half, M);
    FloquetWorkspace ws(M);
    for (int n = 0; n < N; ++n) floquet_step(f, p, ws);
    return std::conj(s_out.up) * detail::project_on_coherent(f.up, f, out) +
           std::conj(s_out.down) * detail::project_on_coherent(f.down, f, out);
}

// Same kernel on the rotor with periodized coherent states.
inline cplx full_rotor_kernel(const CoherentLabel& in, const CoherentLabel& out, const SpinState& s_in,
                              const SpinState& s_out, const KickParams& p, int N, std::size_t M = 1024) {
    SpinorField f = rotor_coherent_state(in, s_in, p.hbar, M);
    FloquetWorkspace ws(M);
    for (int n = 0; n < N; ++n) floquet_step(f, p, ws);
    SpinorField g = rotor_coherent_state(out, s_out, p.hbar, M);
    cplx s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += std::conj(g.up[j]) * f.up[j] + std::conj(g.down[j]) * f.down[j];
    return s * f.dx();
}

}  // namespace psc
