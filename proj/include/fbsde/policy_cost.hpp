#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/brownian.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/sde.hpp"
#include "fbsde/time_grid.hpp"

namespace fbsde {

struct CostEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n_paths = 0;
};

namespace detail {

/// Cost of one freshly simulated path: left-rule running cost plus terminal.
/// Increments are generated on the fly from the counter stream, so nothing
/// is materialized and the value depends only on (seed, path index).
inline double simulate_path_cost(const ControlProblem& pb, const Policy& policy, std::span<const double> x0,
                                 const TimeGrid& grid, std::uint64_t seed, int path) {
    const int n = pb.state_dim;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> dw(static_cast<std::size_t>(pb.noise_dim));
    std::vector<double> a(static_cast<std::size_t>(pb.control_dim));
    EulerScratch ws;
    const double sqrt_dt = std::sqrt(grid.dt);

    double running = 0.0;
    for (int k = 0; k < grid.n_steps; ++k) {
        const double s = grid.node(k);
        policy.act(s, x, a);
        running += pb.running_cost(s, x, a) * grid.dt;
        brownian_step(seed, static_cast<std::uint64_t>(path), static_cast<std::uint64_t>(k), sqrt_dt, dw);
        euler_step_with_control(pb, s, grid.dt, dw, a, x, ws);
        if (!all_finite(x))
            throw std::runtime_error("mc_policy_cost: non-finite state at path " + std::to_string(path) +
                                     ", step " + std::to_string(k + 1));
    }
    (void)n;
    return running + pb.terminal_cost(x);
}

}  // namespace detail

/// Monte-Carlo estimate of the policy cost from (t, x0) over M fresh paths.
/// Per-path values are computed independently (parallel-safe) and reduced in
/// fixed path order, so the estimate is bit-stable across thread counts.
inline CostEstimate mc_policy_cost_estimate(const ControlProblem& problem, const Policy& policy, double t,
                                            std::span<const double> x0, const TimeGrid& grid, int n_paths,
                                            std::uint64_t seed) {
    if (std::abs(grid.start - t) > 1e-12 * std::max(1.0, std::abs(t)))
        throw std::invalid_argument("mc_policy_cost: grid does not start at t");
    if (n_paths < 1) throw std::invalid_argument("mc_policy_cost: n_paths must be positive");

    std::vector<double> costs(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(static)
    for (int m = 0; m < n_paths; ++m)
        costs[static_cast<std::size_t>(m)] = detail::simulate_path_cost(problem, policy, x0, grid, seed, m);

    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= static_cast<double>(n_paths);
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    var = n_paths > 1 ? var / static_cast<double>(n_paths - 1) : 0.0;

    CostEstimate est;
    est.mean = mean;
    est.stderr_ = std::sqrt(var / static_cast<double>(n_paths));
    est.n_paths = n_paths;
    return est;
}

inline double mc_policy_cost(const ControlProblem& problem, const Policy& policy, double t,
                             std::span<const double> x0, const TimeGrid& grid, int n_paths, std::uint64_t seed) {
    return mc_policy_cost_estimate(problem, policy, t, x0, grid, n_paths, seed).mean;
}

}  // namespace fbsde
