// Spin coherence of the kicked rotor in the regular and chaotic regimes.

#include <cstdio>

#include "psc/rotor_quantum.hpp"

int main() {
    using namespace psc;
    for (double K : {0.4, 2.4}) {
        KickParams p;
        p.K = K;
        auto obs = evolve_observables({0.0, 1.5}, SpinState::spin_up(), p, 50);
        double mean = 0.0;
        for (int n = 10; n <= 50; ++n) mean += obs[n].c / 41.0;
        std::printf("K = %.1f  mean coherence over n = 10..50: %.4f  purity at n = 50: %.4f\n", K, mean, obs[50].P);
    }
}
