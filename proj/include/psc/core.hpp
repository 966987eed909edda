// core.hpp: shared numeric types, error classes and a small parallel loop

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace psc {

using cplx = std::complex<double>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Value and first three derivatives of a scalar function of one complex variable.
struct Jet {
    cplx v{}, d1{}, d2{}, d3{};
};

// Axis-aligned rectangle in the complex plane.
struct Rect {
    double re_min{0}, re_max{0}, im_min{0}, im_max{0};

    bool contains(cplx z) const {
        return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min && z.imag() <= im_max;
    }
    cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
    double width() const { return re_max - re_min; }
    double height() const { return im_max - im_min; }

    static Rect around(cplx c, double half) {
        return {c.real() - half, c.real() + half, c.imag() - half, c.imag() + half};
    }
};

// Uniform grid of points over a rectangle, row-major in the imaginary direction.
inline std::vector<cplx> seed_grid(const Rect& r, int n) {
    std::vector<cplx> out;
    if (n <= 0) return out;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        double y = n == 1 ? 0.5 * (r.im_min + r.im_max) : r.im_min + r.height() * j / (n - 1);
        for (int i = 0; i < n; ++i) {
            double x = n == 1 ? 0.5 * (r.re_min + r.re_max) : r.re_min + r.width() * i / (n - 1);
            out.emplace_back(x, y);
        }
    }
    return out;
}

// Sort by real part then imaginary part and drop points closer than tol to a kept one.
inline std::vector<cplx> dedupe_sorted(std::vector<cplx> pts, double tol) {
    std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<cplx> out;
    for (cplx z : pts) {
        bool dup = false;
        for (cplx w : out)
            if (std::abs(z - w) < tol) { dup = true; break; }
        if (!dup) out.push_back(z);
    }
    return out;
}

// ---------------------------------------------------------------- errors

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }
    // Exit status used by the CLI: 2 for configuration problems, 3 for numerics.
    virtual int exit_status() const { return 3; }

private:
    std::string code_;
};

struct ZeroOfInfluenceFunctional : Error {
    cplx q;
    explicit ZeroOfInfluenceFunctional(cplx at)
        : Error("ZeroOfInfluenceFunctional", "influence functional vanishes at q = (" + std::to_string(at.real()) +
                                                 ", " + std::to_string(at.imag()) + ")"),
          q(at) {}
};

struct QuadratureFailure : Error {
    explicit QuadratureFailure(const std::string& w) : Error("QuadratureFailure", w) {}
};

struct GridTooCoarse : Error {
    explicit GridTooCoarse(const std::string& w) : Error("GridTooCoarse", w) {}
};

struct BranchTrackingLost : Error {
    explicit BranchTrackingLost(const std::string& w) : Error("BranchTrackingLost", w) {}
};

struct NoRoots : Error {
    explicit NoRoots(const std::string& w) : Error("NoRoots", w) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("ConfigError", w) {}
    int exit_status() const override { return 2; }
};

// ---------------------------------------------------------------- threads

// Worker count: CAUSTICS_THREADS if set and positive, else the hardware count.
inline unsigned thread_count() {
    if (const char* env = std::getenv("CAUSTICS_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Calls fn(i) for i in [0, n). Results must be written to per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned nt = std::min<std::size_t>(thread_count(), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace psc
