// imf_grid.hpp: Im F of a trajectory map sampled over a Q' window

#pragma once

#include <optional>

#include "psc/complex_dynamics.hpp"
#include "psc/grid_field.hpp"

namespace psc {

inline Axis label_axis(const std::string& name, double lo, double hi, int n) {
    return {name, lo, hi, static_cast<std::size_t>(n)};
}

// Without a fixed exit label each Q' uses the label its own endpoint induces,
// Q'' = Qf(Q'). Points where the map fails get +inf.
template <TrajectoryMap M>
GridField imf_grid(const M& map, const Rect& window, int resolution, std::optional<CoherentLabel> fixed_exit = {}) {
    Axis ax = label_axis("ReQ", window.re_min, window.re_max, resolution);
    Axis ay = label_axis("ImQ", window.im_min, window.im_max, resolution);
    GridField f(ax, ay);
    f.provenance = "semiclassical";
    parallel_for(ax.size * ay.size, [&](std::size_t i) {
        cplx Q(ax.at(i % ax.size), ay.at(i / ax.size));
        MapPoint m = map.evaluate(Q, 1.0);
        double v = std::numeric_limits<double>::infinity();
        if (m.ok()) v = (fixed_exit ? m.F_exit(*fixed_exit) : m.F_induced()).imag();
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        f.values[i] = v;
    });
    return f;
}

}  // namespace psc
