#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbsde/bsde.hpp"
#include "fbsde/criterion.hpp"
#include "fbsde/policy_cost.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/sgd.hpp"

namespace fbsde {

enum class Subroutine { OnPolicy, OffPolicy };

inline const char* subroutine_name(Subroutine s) { return s == Subroutine::OnPolicy ? "on" : "off"; }

/// Policy improvement from a fitted trial. Sets A, B, D plug the gradient
/// model straight into the minimizer; Set C has no gradient model and uses
/// z(s, x) = sigma(s, x)^T d/dx value_model(s, x) instead.
inline Policy policy_from_trial(const ControlProblem& problem, const TrialSolution& trial, CriterionSet set,
                                std::string tag = "improved") {
    if (set == CriterionSet::C) {
        if (!trial.value_model) throw std::invalid_argument("policy_from_trial: Set C needs a value model");
        std::shared_ptr<const Model> value(trial.value_model->clone());
        const DiffusionSpec diffusion = problem.diffusion;
        const int n = problem.state_dim;
        const int d = problem.noise_dim;
        if (diffusion.is_scalar() && n != d)
            throw std::invalid_argument("policy_from_trial: scalar diffusion requires matching dimensions");
        auto z_fn = [value, diffusion, n, d](double s, std::span<const double> x, std::span<double> z) {
            thread_local std::vector<double> gx, sigma;
            gx.resize(static_cast<std::size_t>(n));
            value->input_grad(s, x, gx);
            if (diffusion.is_scalar()) {
                for (int j = 0; j < d; ++j) z[static_cast<std::size_t>(j)] = diffusion.scalar * gx[static_cast<std::size_t>(j)];
            } else {
                sigma.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
                diffusion.matrix(s, x, sigma);
                for (int j = 0; j < d; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < n; ++i)
                        acc += sigma[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) +
                                     static_cast<std::size_t>(j)] *
                               gx[static_cast<std::size_t>(i)];
                    z[static_cast<std::size_t>(j)] = acc;
                }
            }
        };
        return improved_policy(problem, std::move(z_fn), std::move(tag));
    }
    if (!trial.gradient_model) throw std::invalid_argument("policy_from_trial: trial has no gradient model");
    std::shared_ptr<const Model> zm(trial.gradient_model->clone());
    auto z_fn = [zm](double s, std::span<const double> x, std::span<double> z) { zm->eval(s, x, z); };
    return improved_policy(problem, std::move(z_fn), std::move(tag));
}

struct GpiStepConfig {
    CriterionSet set = CriterionSet::A;
    TimeGrid grid;
    OptConfig opt;                  // opt.seed must already be iteration-specific
    int epsilon_eval_batch = 256;   // fresh-batch size for the reported criterion value
    std::uint64_t eval_seed = 0;
    std::string improved_tag = "improved";
    // Evaluation data regime. The subroutines collect their sample once per
    // call and run every gradient step on it; setting this draws a fresh
    // batch (a fresh pool slice, off-policy) for each step instead.
    bool resample_per_step = false;
};

struct GpiStepOutcome {
    Policy improved;
    double epsilon = 0.0;               // final criterion on a fresh evaluation batch
    std::vector<double> loss_history;   // per-SGD-step training losses
};

/// One policy-evaluation + improvement step on trajectories of the evaluated
/// policy itself: integrate paths under `current`, fit the trial on them,
/// report the fresh-batch criterion, return the improved policy.
inline GpiStepOutcome on_policy_step(const ControlProblem& problem, const Policy& current, double t,
                                     std::span<const double> x0, TrialSolution& trial, const GpiStepConfig& cfg) {
    std::vector<double> x0v(x0.begin(), x0.end());
    auto make_instance = [&problem, &current, x0v, grid = cfg.grid](std::uint64_t seed, int batch) {
        auto noise = std::make_shared<BrownianBatch>(sample_brownian(grid, problem.noise_dim, batch, seed));
        auto paths = std::make_shared<StatePathBatch>(integrate_sde(problem, current, x0v, *noise));
        return build_onpolicy_instance(problem, current, std::move(paths), std::move(noise));
    };

    GpiStepOutcome out;
    if (cfg.resample_per_step) {
        InstanceFactory factory = [&make_instance, batch = cfg.opt.batch_size](int, std::uint64_t seed) {
            return make_instance(seed, batch);
        };
        out.loss_history = sgd_solve(factory, trial, cfg.set, cfg.opt).loss_history;
    } else {
        const BsdeInstance sample = make_instance(derive_seed(cfg.opt.seed, {0xDA7Au}), cfg.opt.batch_size);
        InstanceFactory factory = [&sample](int, std::uint64_t) { return sample; };
        out.loss_history = sgd_solve(factory, trial, cfg.set, cfg.opt).loss_history;
    }

    const BsdeInstance eval_inst = make_instance(cfg.eval_seed, cfg.epsilon_eval_batch);
    out.epsilon = criterion_value(eval_inst, trial, cfg.set, measure_for(cfg.set));
    out.improved = policy_from_trial(problem, trial, cfg.set, cfg.improved_tag);
    return out;
}

/// Pre-integrated behavior trajectories: disjoint training slices consumed
/// one per gradient step plus a reserved block for the criterion report.
/// Integrated once and reused across every policy iteration.
struct BehaviorPool {
    std::shared_ptr<const StatePathBatch> paths;
    std::shared_ptr<const BrownianBatch> noise;
    int slice_size = 0;
    int n_slices = 0;
    int eval_size = 0;  // trailing block
};

inline BehaviorPool make_behavior_pool(const ControlProblem& problem, const Policy& behavior, double t,
                                       std::span<const double> x0, const TimeGrid& grid, int slice_size,
                                       int n_slices, int eval_size, std::uint64_t seed) {
    (void)t;
    BehaviorPool pool;
    pool.slice_size = slice_size;
    pool.n_slices = n_slices;
    pool.eval_size = eval_size;
    const int total = slice_size * n_slices + eval_size;
    auto noise = std::make_shared<BrownianBatch>(sample_brownian(grid, problem.noise_dim, total, seed));
    pool.paths = std::make_shared<StatePathBatch>(integrate_sde(problem, behavior, x0, *noise));
    pool.noise = std::move(noise);
    return pool;
}

/// One step of the behavior-data variant: the forward trajectories are never
/// re-sampled; each gradient step takes its own slice of the pool and the
/// generator picks up the linear-in-z coupling between `current` and the
/// behavior policy.
inline GpiStepOutcome off_policy_step(const ControlProblem& problem, const Policy& current, const Policy& behavior,
                                      const BehaviorPool& pool, TrialSolution& trial, const GpiStepConfig& cfg) {
    if (cfg.set == CriterionSet::C)
        throw std::invalid_argument(
            "off_policy_step: Set C is unsupported off-policy (the generator couples to z, so the value fit is "
            "not independent)");
    if (cfg.opt.batch_size != pool.slice_size)
        throw std::invalid_argument("off_policy_step: batch size does not match the pool slice size");

    auto slice_instance = [&problem, &current, &behavior, &pool](int first, int count) {
        auto paths = std::make_shared<StatePathBatch>(slice_state_paths(*pool.paths, first, count));
        auto noise = std::make_shared<BrownianBatch>(slice_brownian(*pool.noise, first, count));
        return build_offpolicy_instance(problem, current, behavior, std::move(paths), std::move(noise));
    };

    GpiStepOutcome out;
    if (cfg.resample_per_step) {
        InstanceFactory factory = [&slice_instance, &pool](int step, std::uint64_t) {
            const int slice = step % pool.n_slices;
            return slice_instance(slice * pool.slice_size, pool.slice_size);
        };
        out.loss_history = sgd_solve(factory, trial, cfg.set, cfg.opt).loss_history;
    } else {
        const BsdeInstance sample = slice_instance(0, pool.slice_size);
        InstanceFactory factory = [&sample](int, std::uint64_t) { return sample; };
        out.loss_history = sgd_solve(factory, trial, cfg.set, cfg.opt).loss_history;
    }

    const BsdeInstance eval_inst = slice_instance(pool.slice_size * pool.n_slices, pool.eval_size);
    out.epsilon = criterion_value(eval_inst, trial, cfg.set, measure_for(cfg.set));
    out.improved = policy_from_trial(problem, trial, cfg.set, cfg.improved_tag);
    return out;
}

/// Full iterative driver configuration. Defaults mirror the 100-dimensional
/// control experiments; the caller overrides what differs.
struct PIConfig {
    Subroutine subroutine = Subroutine::OffPolicy;
    CriterionSet set = CriterionSet::A;
    int n_iterations = 9;
    double initial_gain = -0.1;
    double behavior_gain = -0.1;
    double start_time = 0.0;
    std::vector<double> start_state;
    TimeGrid grid = make_grid(0.0, 1.0, 100);
    OptConfig opt;
    int mlp_hidden = 16;
    int cost_eval_batch = 4096;
    int epsilon_eval_batch = 256;
    bool warm_start = true;
    bool resample_per_step = false;  // see GpiStepConfig
    std::uint64_t seed = 0;

    void validate(const ControlProblem& problem) const {
        if (subroutine == Subroutine::OffPolicy && set == CriterionSet::C)
            throw std::invalid_argument("PIConfig: (off-policy, Set C) is rejected");
        if (n_iterations < 0) throw std::invalid_argument("PIConfig: n_iterations must be nonnegative");
        if (start_state.size() != static_cast<std::size_t>(problem.state_dim))
            throw std::invalid_argument("PIConfig: start state dimension mismatch");
        if (cost_eval_batch < 2 || epsilon_eval_batch < 2)
            throw std::invalid_argument("PIConfig: evaluation batches must hold at least two paths");
        opt.validate();
    }
};

/// Per-iteration record of the policy-iteration run. costs has
/// n_iterations + 1 entries (the initial policy included); epsilons and
/// trial snapshots have n_iterations. A divergence aborts the loop and
/// returns what finished, flagged.
struct PIResult {
    std::vector<double> costs;
    std::vector<double> cost_stderrs;
    std::vector<double> epsilons;
    std::vector<std::vector<double>> trial_params;
    std::vector<double> iteration_seconds;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
};

/// Fresh trial networks for a policy-iteration run. The output layers start
/// at zero: the fitted targets (the value level aside) are small relative to
/// the default init scale, and starting the z field at zero keeps the early
/// criterion landscape out of the noise-dominated large-amplitude regime at
/// batch size 16.
inline TrialSolution make_pi_trial(const ControlProblem& problem, int hidden, std::uint64_t seed) {
    TrialSolution trial;
    trial.y0 = 0.0;
    auto value = std::make_unique<MlpModel>(problem.state_dim, hidden, 1, derive_seed(seed, {1}));
    auto gradient = std::make_unique<MlpModel>(problem.state_dim, hidden, problem.noise_dim, derive_seed(seed, {2}));
    value->zero_output_layer();
    gradient->zero_output_layer();
    trial.value_model = std::move(value);
    trial.gradient_model = std::move(gradient);
    return trial;
}

/// Generalized policy iteration: alternate policy evaluation (criterion
/// minimization) and improvement, recording a fresh-seed cost estimate and
/// the fresh-batch criterion value each round. The cost estimator reuses one
/// evaluation seed across iterations so successive costs share randomness.
inline PIResult run_gpi(const ControlProblem& problem, const PIConfig& cfg) {
    cfg.validate(problem);
    PIResult result;
    result.seed = cfg.seed;

    const Policy initial = linear_policy(problem, cfg.initial_gain);
    const Policy behavior = linear_policy(problem, cfg.behavior_gain);
    const std::uint64_t cost_seed = derive_seed(cfg.seed, {0xC0u});
    const std::uint64_t pool_seed = derive_seed(cfg.seed, {0xB0u});

    const CostEstimate initial_cost = mc_policy_cost_estimate(problem, initial, cfg.start_time, cfg.start_state,
                                                              cfg.grid, cfg.cost_eval_batch, cost_seed);
    result.costs.push_back(initial_cost.mean);
    result.cost_stderrs.push_back(initial_cost.stderr_);

    BehaviorPool pool;
    if (cfg.subroutine == Subroutine::OffPolicy)
        pool = make_behavior_pool(problem, behavior, cfg.start_time, cfg.start_state, cfg.grid, cfg.opt.batch_size,
                                  cfg.resample_per_step ? cfg.opt.n_steps : 1, cfg.epsilon_eval_batch, pool_seed);

    TrialSolution trial = make_pi_trial(problem, cfg.mlp_hidden, derive_seed(cfg.seed, {0x7Au}));
    Policy current = initial;
    try {
        for (int iter = 1; iter <= cfg.n_iterations; ++iter) {
            const auto t0 = std::chrono::steady_clock::now();
            if (!cfg.warm_start && iter > 1)
                trial = make_pi_trial(problem, cfg.mlp_hidden,
                                      derive_seed(cfg.seed, {0x7Au, static_cast<std::uint64_t>(iter)}));
            GpiStepConfig step;
            step.set = cfg.set;
            step.grid = cfg.grid;
            step.opt = cfg.opt;
            step.opt.seed = derive_seed(cfg.seed, {0x57u, static_cast<std::uint64_t>(iter)});
            step.epsilon_eval_batch = cfg.epsilon_eval_batch;
            step.eval_seed = derive_seed(cfg.seed, {0xE5u, static_cast<std::uint64_t>(iter)});
            step.improved_tag = "improved[" + std::to_string(iter) + "]";
            step.resample_per_step = cfg.resample_per_step;

            GpiStepOutcome outcome =
                cfg.subroutine == Subroutine::OnPolicy
                    ? on_policy_step(problem, current, cfg.start_time, cfg.start_state, trial, step)
                    : off_policy_step(problem, current, behavior, pool, trial, step);

            current = outcome.improved;
            result.epsilons.push_back(outcome.epsilon);
            result.trial_params.push_back(trial.get_params());

            const CostEstimate cost = mc_policy_cost_estimate(problem, current, cfg.start_time, cfg.start_state,
                                                              cfg.grid, cfg.cost_eval_batch, cost_seed);
            result.costs.push_back(cost.mean);
            result.cost_stderrs.push_back(cost.stderr_);
            result.iteration_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
    } catch (const std::runtime_error& e) {
        result.failed = true;
        result.failure = e.what();
    }
    return result;
}

}  // namespace fbsde
