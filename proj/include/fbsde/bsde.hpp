#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/brownian.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/sde.hpp"
#include "fbsde/time_grid.hpp"

namespace fbsde {

/// Discrete generator of a backward equation over a path batch.
/// With empty coupling the generator is decoupled: f_k = base[m][k].
/// Otherwise it is linear in z:            f_k(z) = base[m][k] + <coupling[m][k], z>.
struct GeneratorSpec {
    std::vector<double> base;      // [path][step]
    std::vector<double> coupling;  // [path][step][dim], empty when decoupled

    bool linear_in_z() const { return !coupling.empty(); }
};

/// One backward equation instance: terminal values, generator and the
/// forward data (paths and driving increments) everything was built from.
struct BsdeInstance {
    TimeGrid grid;
    int noise_dim = 0;
    int n_paths = 0;
    std::shared_ptr<const BrownianBatch> noise;
    std::shared_ptr<const StatePathBatch> paths;
    std::vector<double> terminal;  // [path]
    GeneratorSpec generator;

    double base_at(int m, int k) const {
        return generator.base[static_cast<std::size_t>(m) * static_cast<std::size_t>(grid.n_steps) +
                              static_cast<std::size_t>(k)];
    }
    std::span<const double> coupling_at(int m, int k) const {
        const std::size_t off =
            (static_cast<std::size_t>(m) * static_cast<std::size_t>(grid.n_steps) + static_cast<std::size_t>(k)) *
            static_cast<std::size_t>(noise_dim);
        return {generator.coupling.data() + off, static_cast<std::size_t>(noise_dim)};
    }

    void validate() const {
        const std::size_t mn = static_cast<std::size_t>(n_paths) * static_cast<std::size_t>(grid.n_steps);
        if (terminal.size() != static_cast<std::size_t>(n_paths))
            throw std::invalid_argument("BsdeInstance: terminal size mismatch");
        if (generator.base.size() != mn) throw std::invalid_argument("BsdeInstance: generator base size mismatch");
        if (!generator.coupling.empty() && generator.coupling.size() != mn * static_cast<std::size_t>(noise_dim))
            throw std::invalid_argument("BsdeInstance: generator coupling size mismatch");
        for (double v : terminal)
            if (!std::isfinite(v)) throw std::invalid_argument("BsdeInstance: non-finite terminal value");
        if (!noise || !paths) throw std::invalid_argument("BsdeInstance: missing forward data");
        if (noise->n_paths != n_paths || paths->n_paths != n_paths)
            throw std::invalid_argument("BsdeInstance: batch path counts disagree");
        if (noise->grid.n_steps != grid.n_steps || paths->grid.n_steps != grid.n_steps)
            throw std::invalid_argument("BsdeInstance: grids disagree");
    }
};

/// Builds the evaluation instance for a policy on its own trajectories:
/// terminal g(X_T) and decoupled generator f(s_k, X_k, alpha(s_k, X_k)).
inline BsdeInstance build_onpolicy_instance(const ControlProblem& problem, const Policy& policy,
                                            std::shared_ptr<const StatePathBatch> paths,
                                            std::shared_ptr<const BrownianBatch> noise) {
    if (!paths || !noise) throw std::invalid_argument("build_onpolicy_instance: missing batches");
    if (paths->state_dim != problem.state_dim)
        throw std::invalid_argument("build_onpolicy_instance: state dimension mismatch");
    if (noise->dim != problem.noise_dim)
        throw std::invalid_argument("build_onpolicy_instance: noise dimension mismatch");
    if (paths->n_paths != noise->n_paths)
        throw std::invalid_argument("build_onpolicy_instance: path counts disagree");

    BsdeInstance inst;
    inst.grid = paths->grid;
    inst.noise_dim = problem.noise_dim;
    inst.n_paths = paths->n_paths;
    inst.noise = std::move(noise);
    inst.paths = std::move(paths);

    const int m_count = inst.n_paths;
    const int n_steps = inst.grid.n_steps;
    inst.terminal.resize(static_cast<std::size_t>(m_count));
    inst.generator.base.resize(static_cast<std::size_t>(m_count) * static_cast<std::size_t>(n_steps));

    std::vector<double> a(static_cast<std::size_t>(problem.control_dim));
    for (int m = 0; m < m_count; ++m) {
        for (int k = 0; k < n_steps; ++k) {
            const double s = inst.grid.node(k);
            auto x = inst.paths->at(m, k);
            policy.act(s, x, a);
            inst.generator.base[static_cast<std::size_t>(m) * static_cast<std::size_t>(n_steps) +
                                static_cast<std::size_t>(k)] = problem.running_cost(s, x, a);
        }
        inst.terminal[static_cast<std::size_t>(m)] = problem.terminal_cost(inst.paths->at(m, n_steps));
    }
    inst.validate();
    return inst;
}

/// Builds the evaluation instance for `target` on trajectories generated by
/// `behavior`: the generator picks up the linear-in-z coupling
/// control_drift(target) - control_drift(behavior) along the behavior paths.
/// With target == behavior the coupling vanishes and the instance reduces to
/// the on-policy form.
inline BsdeInstance build_offpolicy_instance(const ControlProblem& problem, const Policy& target,
                                             const Policy& behavior,
                                             std::shared_ptr<const StatePathBatch> behavior_paths,
                                             std::shared_ptr<const BrownianBatch> noise) {
    if (!behavior_paths || !noise) throw std::invalid_argument("build_offpolicy_instance: missing batches");
    if (behavior_paths->state_dim != problem.state_dim)
        throw std::invalid_argument("build_offpolicy_instance: state dimension mismatch");
    if (noise->dim != problem.noise_dim)
        throw std::invalid_argument("build_offpolicy_instance: noise dimension mismatch");
    if (behavior_paths->n_paths != noise->n_paths)
        throw std::invalid_argument("build_offpolicy_instance: path counts disagree");

    BsdeInstance inst;
    inst.grid = behavior_paths->grid;
    inst.noise_dim = problem.noise_dim;
    inst.n_paths = behavior_paths->n_paths;
    inst.noise = std::move(noise);
    inst.paths = std::move(behavior_paths);

    const int m_count = inst.n_paths;
    const int n_steps = inst.grid.n_steps;
    const int d = problem.noise_dim;
    inst.terminal.resize(static_cast<std::size_t>(m_count));
    inst.generator.base.resize(static_cast<std::size_t>(m_count) * static_cast<std::size_t>(n_steps));
    inst.generator.coupling.resize(static_cast<std::size_t>(m_count) * static_cast<std::size_t>(n_steps) *
                                   static_cast<std::size_t>(d));

    std::vector<double> a_target(static_cast<std::size_t>(problem.control_dim));
    std::vector<double> a_behavior(static_cast<std::size_t>(problem.control_dim));
    std::vector<double> bt(static_cast<std::size_t>(d));
    std::vector<double> bb(static_cast<std::size_t>(d));
    for (int m = 0; m < m_count; ++m) {
        for (int k = 0; k < n_steps; ++k) {
            const double s = inst.grid.node(k);
            auto x = inst.paths->at(m, k);
            target.act(s, x, a_target);
            behavior.act(s, x, a_behavior);
            std::fill(bt.begin(), bt.end(), 0.0);
            std::fill(bb.begin(), bb.end(), 0.0);
            if (problem.control_drift) {
                problem.control_drift(s, x, a_target, bt);
                problem.control_drift(s, x, a_behavior, bb);
            }
            const std::size_t idx =
                static_cast<std::size_t>(m) * static_cast<std::size_t>(n_steps) + static_cast<std::size_t>(k);
            inst.generator.base[idx] = problem.running_cost(s, x, a_target);
            double* c = inst.generator.coupling.data() + idx * static_cast<std::size_t>(d);
            for (int j = 0; j < d; ++j) c[j] = bt[static_cast<std::size_t>(j)] - bb[static_cast<std::size_t>(j)];
        }
        inst.terminal[static_cast<std::size_t>(m)] = problem.terminal_cost(inst.paths->at(m, n_steps));
    }
    inst.validate();
    return inst;
}

}  // namespace fbsde
