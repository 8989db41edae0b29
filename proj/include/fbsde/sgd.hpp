#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/criterion.hpp"
#include "fbsde/rng.hpp"

namespace fbsde {

/// Stochastic-gradient configuration with per-group learning rates for
/// (y0, value model, gradient model). clip_norm = 0 disables clipping;
/// lr_decay multiplies every rate after each step.
struct OptConfig {
    double lr_y0 = 0.1;
    double lr_value = 1e-5;
    double lr_gradient = 1e-3;
    double momentum = 0.0;
    bool nesterov = false;
    double clip_norm = 0.0;
    double lr_decay = 1.0;
    int n_steps = 200;
    int batch_size = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lr_y0 > 0.0) || !(lr_value > 0.0) || !(lr_gradient > 0.0))
            throw std::invalid_argument("OptConfig: learning rates must be positive");
        if (!(lr_decay > 0.0) || lr_decay > 1.0) throw std::invalid_argument("OptConfig: decay must be in (0, 1]");
        if (n_steps < 1) throw std::invalid_argument("OptConfig: n_steps must be positive");
        if (batch_size < 1) throw std::invalid_argument("OptConfig: batch_size must be positive");
        if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("OptConfig: momentum must be in [0, 1)");
        if (nesterov && momentum <= 0.0)
            throw std::invalid_argument("OptConfig: Nesterov requires positive momentum");
        if (clip_norm < 0.0) throw std::invalid_argument("OptConfig: clip threshold must be nonnegative");
    }
};

/// Plain SGD with optional (Nesterov) momentum over a flat parameter vector
/// partitioned into rate groups. Matches the usual update
///     v <- mu v + g;   p <- p - lr * (g + mu v)   (Nesterov)
///     v <- mu v + g;   p <- p - lr * v            (heavy ball)
///     p <- p - lr * g                             (mu = 0).
class SgdOptimizer {
public:
    SgdOptimizer(std::vector<double> group_rates, std::vector<int> group_of_param, double momentum, bool nesterov,
                 double clip_norm, double lr_decay)
        : rates_(std::move(group_rates)),
          group_(std::move(group_of_param)),
          momentum_(momentum),
          nesterov_(nesterov),
          clip_norm_(clip_norm),
          decay_(lr_decay),
          velocity_(group_.size(), 0.0) {}

    /// One update in place; grad is consumed (may be rescaled by clipping).
    void step(std::vector<double>& params, std::vector<double>& grad) {
        if (params.size() != group_.size() || grad.size() != group_.size())
            throw std::invalid_argument("SgdOptimizer: size mismatch");
        if (clip_norm_ > 0.0) {
            double norm2 = 0.0;
            for (double g : grad) norm2 += g * g;
            const double norm = std::sqrt(norm2);
            if (norm > clip_norm_) {
                const double scale = clip_norm_ / norm;
                for (double& g : grad) g *= scale;
            }
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double lr = rates_[static_cast<std::size_t>(group_[i])];
            double direction = grad[i];
            if (momentum_ > 0.0) {
                velocity_[i] = momentum_ * velocity_[i] + grad[i];
                direction = nesterov_ ? grad[i] + momentum_ * velocity_[i] : velocity_[i];
            }
            params[i] -= lr * direction;
        }
        for (double& r : rates_) r *= decay_;
    }

    const std::vector<double>& rates() const { return rates_; }

private:
    std::vector<double> rates_;
    std::vector<int> group_;
    double momentum_;
    bool nesterov_;
    double clip_norm_;
    double decay_;
    std::vector<double> velocity_;
};

/// Builds an instance for one gradient step. `step` indexes the SGD step and
/// `seed` is the derived per-step stream; pure factories may use either.
using InstanceFactory = std::function<BsdeInstance(int step, std::uint64_t seed)>;

/// Called once per step with the loss just measured on that step's batch and
/// the trial state *before* the update.
using StepObserver = std::function<void(int step, double loss, const TrialSolution& trial)>;

struct SgdResult {
    std::vector<double> loss_history;  // one entry per step (pre-update batch loss)
};

/// Runs the SGD loop: each step draws a fresh instance from the factory,
/// evaluates the criterion and its exact gradient, clips, and applies the
/// per-group rates. The trial is updated in place (callers warm-start by
/// passing it back in). Throws with the step index on a non-finite loss.
inline SgdResult sgd_solve(const InstanceFactory& factory, TrialSolution& trial, CriterionSet set,
                           const OptConfig& opt, const StepObserver& observer = {}) {
    opt.validate();
    const TimeMeasure measure = measure_for(set);

    const int v_count = trial.value_model ? trial.value_model->param_count() : 0;
    std::vector<int> groups(static_cast<std::size_t>(trial.param_count()));
    groups[0] = 0;
    for (int i = 0; i < v_count; ++i) groups[static_cast<std::size_t>(1 + i)] = 1;
    for (std::size_t i = static_cast<std::size_t>(1 + v_count); i < groups.size(); ++i) groups[i] = 2;
    SgdOptimizer optimizer({opt.lr_y0, opt.lr_value, opt.lr_gradient}, std::move(groups), opt.momentum,
                           opt.nesterov, opt.clip_norm, opt.lr_decay);

    SgdResult result;
    result.loss_history.reserve(static_cast<std::size_t>(opt.n_steps));
    std::vector<double> params = trial.get_params();
    for (int step = 0; step < opt.n_steps; ++step) {
        const BsdeInstance inst = factory(step, derive_seed(opt.seed, {static_cast<std::uint64_t>(step)}));
        CriterionEval eval = criterion_value_and_grad(inst, trial, set, measure);
        if (!std::isfinite(eval.value))
            throw std::runtime_error("sgd_solve: non-finite loss at step " + std::to_string(step));
        if (observer) observer(step, eval.value, trial);
        result.loss_history.push_back(eval.value);
        optimizer.step(params, eval.gradient);
        trial.set_params(params);
    }
    return result;
}

}  // namespace fbsde
