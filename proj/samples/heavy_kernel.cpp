// Exact and semiclassical heavy-particle kernel at a few exit labels, with the
// saddle branches that were kept or discarded.

#include <cstdio>

#include "psc/heavy_model.hpp"

int main() {
    using namespace psc;
    HeavyParams p;  // hbar 0.25, F 1, J 0.75, t 1.5
    SpinState up = SpinState::spin_up();
    HeavyMap map({0.0, 0.0}, up, up, p);
    StokesAnalysis A = heavy_stokes(map);

    HeavyKernelOptions o;
    o.stokes = &A;
    for (CoherentLabel out : {CoherentLabel{0.0, 1.0}, CoherentLabel{0.0, -0.85}, CoherentLabel{0.8, -1.6}}) {
        double ex = std::norm(exact_kernel({0.0, 0.0}, out, up, up, p));
        KernelResult r = semiclassical_kernel(map, out, o);
        std::printf("exit (%.2f, %.2f): exact %.6f  semiclassical %.6f\n", out.q, out.p, ex, std::norm(r.value));
        for (const auto& b : r.branches)
            std::printf("    Q' = %+.4f%+.4fi  Im F = %+.4f  %s\n", b.Qprime.real(), b.Qprime.imag(), b.F.imag(),
                        b.physical ? "kept" : "discarded");
    }
}
