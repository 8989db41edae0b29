#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace fbsde {

/// Uniform discretization of [t0, T] into n_steps intervals.
/// Node k is t0 + k*dt; node n_steps lands on T up to one ulp.
struct TimeGrid {
    double start = 0.0;
    double horizon = 1.0;
    int n_steps = 1;
    double dt = 1.0;

    double node(int k) const { return start + static_cast<double>(k) * dt; }
};

inline TimeGrid make_grid(double t0, double horizon, int n_steps) {
    if (!(horizon > t0)) throw std::invalid_argument("make_grid: horizon must exceed start time");
    if (n_steps < 1) throw std::invalid_argument("make_grid: n_steps must be positive");
    TimeGrid g;
    g.start = t0;
    g.horizon = horizon;
    g.n_steps = n_steps;
    g.dt = (horizon - t0) / static_cast<double>(n_steps);
    return g;
}

/// Weight measure on the time axis used by the path-regression criteria.
/// The variant set is closed: a point mass at the start node or Lebesgue.
enum class TimeMeasure {
    DiracAtStart,
    Lebesgue,
};

/// Integrates per-node values of one path against the measure.
/// Lebesgue is the left-endpoint Riemann sum: the terminal node carries no
/// mass, matching the adapted (non-anticipating) evaluation convention used
/// for every time integral in this library.
inline double quadrature(std::span<const double> values, TimeMeasure measure, const TimeGrid& grid) {
    if (values.size() != static_cast<std::size_t>(grid.n_steps + 1))
        throw std::invalid_argument("quadrature: values must cover all grid nodes");
    switch (measure) {
        case TimeMeasure::DiracAtStart:
            return values[0];
        case TimeMeasure::Lebesgue: {
            double acc = 0.0;
            for (int k = 0; k < grid.n_steps; ++k) acc += values[static_cast<std::size_t>(k)];
            return acc * grid.dt;
        }
    }
    throw std::logic_error("quadrature: unknown measure");
}

}  // namespace fbsde
