#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/brownian.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/time_grid.hpp"

namespace fbsde {

/// Simulated state paths, layout [path][node][state_dim] with node 0 = x0.
struct StatePathBatch {
    TimeGrid grid;
    int state_dim = 0;
    int n_paths = 0;
    std::string policy_tag;
    std::vector<double> states;

    std::span<const double> at(int path, int k) const {
        const std::size_t off = (static_cast<std::size_t>(path) * static_cast<std::size_t>(grid.n_steps + 1) +
                                 static_cast<std::size_t>(k)) *
                                static_cast<std::size_t>(state_dim);
        return {states.data() + off, static_cast<std::size_t>(state_dim)};
    }
    std::span<double> at(int path, int k) {
        const std::size_t off = (static_cast<std::size_t>(path) * static_cast<std::size_t>(grid.n_steps + 1) +
                                 static_cast<std::size_t>(k)) *
                                static_cast<std::size_t>(state_dim);
        return {states.data() + off, static_cast<std::size_t>(state_dim)};
    }
};

/// Copies paths [first, first + count) into a standalone batch.
inline StatePathBatch slice_state_paths(const StatePathBatch& batch, int first, int count) {
    if (first < 0 || count < 1 || first + count > batch.n_paths)
        throw std::invalid_argument("slice_state_paths: slice out of range");
    StatePathBatch out;
    out.grid = batch.grid;
    out.state_dim = batch.state_dim;
    out.n_paths = count;
    out.policy_tag = batch.policy_tag;
    const std::size_t stride =
        static_cast<std::size_t>(batch.grid.n_steps + 1) * static_cast<std::size_t>(batch.state_dim);
    out.states.assign(batch.states.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(first)),
                      batch.states.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(first + count)));
    return out;
}

namespace detail {

struct EulerScratch {
    std::vector<double> control;
    std::vector<double> drift_c;  // control_drift output, R^d
    std::vector<double> drift_b;  // base drift, R^n
    std::vector<double> sigma;    // n*d matrix when the diffusion is general
};

/// One explicit Euler-Maruyama update in place with a precomputed control:
///   x += [base(t,x) + sigma(t,x) * control_drift(t,x,a)] dt + sigma(t,x) dW.
inline void euler_step_with_control(const ControlProblem& pb, double t, double dt, std::span<const double> dw,
                                    std::span<const double> control, std::span<double> x, EulerScratch& ws) {
    const int n = pb.state_dim;
    const int d = pb.noise_dim;
    ws.drift_c.assign(static_cast<std::size_t>(d), 0.0);
    ws.drift_b.assign(static_cast<std::size_t>(n), 0.0);

    if (pb.control_drift) pb.control_drift(t, x, control, ws.drift_c);
    if (pb.base_drift) pb.base_drift(t, x, ws.drift_b);

    if (pb.diffusion.is_scalar()) {
        const double s0 = pb.diffusion.scalar;
        for (int i = 0; i < n; ++i) x[i] += (ws.drift_b[i] + s0 * ws.drift_c[i]) * dt + s0 * dw[i];
    } else {
        ws.sigma.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
        pb.diffusion.matrix(t, x, ws.sigma);
        for (int i = 0; i < n; ++i) {
            double acc = ws.drift_b[i] * dt;
            const double* row = ws.sigma.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d);
            for (int j = 0; j < d; ++j) acc += row[j] * (ws.drift_c[j] * dt + dw[j]);
            x[i] += acc;
        }
    }
}

inline void euler_step(const ControlProblem& pb, const Policy& policy, double t, double dt,
                       std::span<const double> dw, std::span<double> x, EulerScratch& ws) {
    ws.control.resize(static_cast<std::size_t>(pb.control_dim));
    policy.act(t, x, ws.control);
    euler_step_with_control(pb, t, dt, dw, ws.control, x, ws);
}

inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace detail

/// Integrates the controlled forward SDE over the batch's grid.
/// Throws with the offending (path, step) if a state leaves the finite range.
inline StatePathBatch integrate_sde(const ControlProblem& problem, const Policy& policy,
                                    std::span<const double> x0, const BrownianBatch& batch) {
    if (batch.dim != problem.noise_dim)
        throw std::invalid_argument("integrate_sde: Brownian dimension does not match problem noise dimension");
    if (x0.size() != static_cast<std::size_t>(problem.state_dim))
        throw std::invalid_argument("integrate_sde: x0 dimension mismatch");

    StatePathBatch out;
    out.grid = batch.grid;
    out.state_dim = problem.state_dim;
    out.n_paths = batch.n_paths;
    out.policy_tag = policy.tag;
    out.states.resize(static_cast<std::size_t>(batch.n_paths) * static_cast<std::size_t>(batch.grid.n_steps + 1) *
                      static_cast<std::size_t>(problem.state_dim));

    const TimeGrid& grid = batch.grid;
    for (int m = 0; m < batch.n_paths; ++m) {
        detail::EulerScratch ws;
        std::copy(x0.begin(), x0.end(), out.at(m, 0).begin());
        for (int k = 0; k < grid.n_steps; ++k) {
            auto prev = out.at(m, k);
            auto next = out.at(m, k + 1);
            std::copy(prev.begin(), prev.end(), next.begin());
            detail::euler_step(problem, policy, grid.node(k), grid.dt, batch.step(m, k), next, ws);
            if (!detail::all_finite(next))
                throw std::runtime_error("integrate_sde: non-finite state at path " + std::to_string(m) +
                                         ", step " + std::to_string(k + 1));
        }
    }
    return out;
}

}  // namespace fbsde
