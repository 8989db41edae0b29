#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/bsde.hpp"
#include "fbsde/time_grid.hpp"
#include "fbsde/trial.hpp"

namespace fbsde {

/// The four realized losses, one per table row:
///   A: E|Ytilde_t - y0|^2                     (Dirac at start)
///   B: E|Ytilde_t - E Ytilde_t|^2             (Dirac at start)
///   C: E int |Ytilde^0_s - v(s, X_s)|^2 ds    (Lebesgue, z forced to 0)
///   D: E int |Ytilde^z_s - v(s, X_s)|^2 ds    (Lebesgue)
enum class CriterionSet { A, B, C, D };

inline TimeMeasure measure_for(CriterionSet set) {
    return (set == CriterionSet::A || set == CriterionSet::B) ? TimeMeasure::DiracAtStart : TimeMeasure::Lebesgue;
}

inline char criterion_set_name(CriterionSet set) {
    switch (set) {
        case CriterionSet::A: return 'a';
        case CriterionSet::B: return 'b';
        case CriterionSet::C: return 'c';
        case CriterionSet::D: return 'd';
    }
    return '?';
}

inline CriterionSet criterion_set_from_name(const std::string& name) {
    if (name == "a" || name == "A") return CriterionSet::A;
    if (name == "b" || name == "B") return CriterionSet::B;
    if (name == "c" || name == "C") return CriterionSet::C;
    if (name == "d" || name == "D") return CriterionSet::D;
    throw std::invalid_argument("unknown criterion set: " + name);
}

namespace detail {

/// Computes the candidate backward process of one path by a single backward
/// sweep:
///   Ytilde[N] = xi,
///   Ytilde[k] = Ytilde[k+1] + f(s_k, z_k) dt - <z_k, dW_k>,
/// where z_k = gradient_model(s_k, X_k) (or 0 for Set C) and the stochastic
/// sum takes its integrand at the left node. Fills z_nodes ([step][dim],
/// untouched for Set C) and ytilde (size N+1).
inline void tilde_sweep(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set, int m,
                        std::vector<double>& z_nodes, std::vector<double>& ytilde) {
    const int n_steps = inst.grid.n_steps;
    const int d = inst.noise_dim;
    const bool use_z = set != CriterionSet::C;
    const bool linear = inst.generator.linear_in_z();

    if (use_z) {
        z_nodes.resize(static_cast<std::size_t>(n_steps) * static_cast<std::size_t>(d));
        for (int k = 0; k < n_steps; ++k)
            trial.gradient_model->eval(inst.grid.node(k), inst.paths->at(m, k),
                                       {z_nodes.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(d),
                                        static_cast<std::size_t>(d)});
    }

    ytilde.resize(static_cast<std::size_t>(n_steps + 1));
    ytilde[static_cast<std::size_t>(n_steps)] = inst.terminal[static_cast<std::size_t>(m)];
    for (int k = n_steps - 1; k >= 0; --k) {
        double f = inst.base_at(m, k);
        double zdw = 0.0;
        if (use_z) {
            const double* zk = z_nodes.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(d);
            auto dw = inst.noise->step(m, k);
            if (linear) {
                auto c = inst.coupling_at(m, k);
                for (int j = 0; j < d; ++j) f += c[static_cast<std::size_t>(j)] * zk[j];
            }
            for (int j = 0; j < d; ++j) zdw += zk[j] * dw[static_cast<std::size_t>(j)];
        }
        ytilde[static_cast<std::size_t>(k)] = ytilde[static_cast<std::size_t>(k + 1)] + f * inst.grid.dt - zdw;
        if (!std::isfinite(ytilde[static_cast<std::size_t>(k)]))
            throw std::runtime_error("tilde_y: non-finite value at path " + std::to_string(m) + ", step " +
                                     std::to_string(k));
    }
}

struct CriterionWorkspace {
    std::vector<double> z_nodes;
    std::vector<double> ytilde;
    std::vector<double> upstream;  // dL/dYtilde_j per node
    std::vector<double> zbar;      // dL/dz_k scratch
};

/// Processes one path with already-swept (z_nodes, ytilde): returns the
/// path's additive value contribution and, when grad is nonempty,
/// backpropagates into the flat trial gradient.
///
/// Ytilde_j depends on the step-k term (k >= j) for every j <= k, so the
/// cotangent of the step-k term is the prefix sum U_k = sum_{j<=k} dL/dYtilde_j
/// and dL/dz_k = U_k * (coupling_k dt - dW_k), covering both the generator
/// coupling and the stochastic sum.
inline double path_process(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set, int m,
                           CriterionWorkspace& ws, const std::vector<double>& z_nodes,
                           const std::vector<double>& ytilde, double y0, double inv_weight, double batch_mean,
                           std::span<double> grad) {
    const int n_steps = inst.grid.n_steps;
    const int d = inst.noise_dim;
    const double dt = inst.grid.dt;
    const bool use_z = set != CriterionSet::C;
    const bool linear = inst.generator.linear_in_z();
    const bool with_grad = !grad.empty();

    double contribution = 0.0;
    if (with_grad) ws.upstream.assign(static_cast<std::size_t>(n_steps + 1), 0.0);
    const int v_count = trial.value_model ? trial.value_model->param_count() : 0;
    std::span<double> vgrad = with_grad ? grad.subspan(1, static_cast<std::size_t>(v_count)) : std::span<double>{};
    std::span<double> zgrad = with_grad ? grad.subspan(1 + static_cast<std::size_t>(v_count)) : std::span<double>{};

    switch (set) {
        case CriterionSet::A: {
            const double r = ytilde[0] - y0;
            contribution = r * r;
            if (with_grad) {
                const double u0 = 2.0 * inv_weight * r;
                ws.upstream[0] = u0;
                grad[0] += -u0;  // dL/dy0
            }
            break;
        }
        case CriterionSet::B: {
            if (with_grad) ws.upstream[0] = 2.0 * inv_weight * (ytilde[0] - batch_mean);
            break;  // value handled at batch level from the start nodes
        }
        case CriterionSet::C:
        case CriterionSet::D: {
            for (int k = 0; k < n_steps; ++k) {
                const double s = inst.grid.node(k);
                auto x = inst.paths->at(m, k);
                const double v = trial.value_model->eval_scalar(s, x);
                const double r = ytilde[static_cast<std::size_t>(k)] - v;
                contribution += r * r;
                if (with_grad) {
                    const double u = 2.0 * inv_weight * r * dt;
                    ws.upstream[static_cast<std::size_t>(k)] = u;
                    const double dv = -u;
                    trial.value_model->accumulate_param_grad(s, x, {&dv, 1}, vgrad);
                }
            }
            contribution *= dt;
            break;
        }
    }

    if (!with_grad || !use_z) return contribution;
    ws.zbar.resize(static_cast<std::size_t>(d));
    double prefix = 0.0;
    for (int k = 0; k < n_steps; ++k) {
        prefix += ws.upstream[static_cast<std::size_t>(k)];
        if (prefix == 0.0) continue;
        auto dw = inst.noise->step(m, k);
        if (linear) {
            auto c = inst.coupling_at(m, k);
            for (int j = 0; j < d; ++j)
                ws.zbar[static_cast<std::size_t>(j)] =
                    prefix * (c[static_cast<std::size_t>(j)] * dt - dw[static_cast<std::size_t>(j)]);
        } else {
            for (int j = 0; j < d; ++j)
                ws.zbar[static_cast<std::size_t>(j)] = -prefix * dw[static_cast<std::size_t>(j)];
        }
        trial.gradient_model->accumulate_param_grad(inst.grid.node(k), inst.paths->at(m, k), ws.zbar, zgrad);
    }
    return contribution;
}

inline void check_measure(CriterionSet set, TimeMeasure measure) {
    if (measure_for(set) != measure)
        throw std::invalid_argument("criterion: measure does not match the requested set");
}

inline void check_trial(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set) {
    if (set != CriterionSet::C) {
        if (!trial.gradient_model) throw std::invalid_argument("criterion: trial has no gradient model");
        if (trial.gradient_model->output_dim() != inst.noise_dim)
            throw std::invalid_argument("criterion: gradient model output dimension mismatch");
    }
    if ((set == CriterionSet::C || set == CriterionSet::D) && !trial.value_model)
        throw std::invalid_argument("criterion: trial has no value model");
    if (set == CriterionSet::B && inst.n_paths < 2)
        throw std::invalid_argument("criterion: Set B needs at least two paths");
}

}  // namespace detail

/// The candidate backward process over the whole batch, [path][node].
inline std::vector<double> tilde_y(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set) {
    detail::check_trial(inst, trial, set);
    std::vector<double> out(static_cast<std::size_t>(inst.n_paths) * static_cast<std::size_t>(inst.grid.n_steps + 1));
    detail::CriterionWorkspace ws;
    for (int m = 0; m < inst.n_paths; ++m) {
        detail::tilde_sweep(inst, trial, set, m, ws.z_nodes, ws.ytilde);
        std::copy(ws.ytilde.begin(), ws.ytilde.end(),
                  out.begin() + static_cast<std::size_t>(m) * static_cast<std::size_t>(inst.grid.n_steps + 1));
    }
    return out;
}

struct CriterionEval {
    double value = 0.0;
    std::vector<double> gradient;  // flat trial layout [y0 | value | gradient]
};

namespace detail {

inline CriterionEval criterion_eval(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set,
                                    TimeMeasure measure, bool want_grad) {
    check_measure(set, measure);
    check_trial(inst, trial, set);
    const int m_count = inst.n_paths;
    CriterionEval out;
    if (want_grad) out.gradient.assign(static_cast<std::size_t>(trial.param_count()), 0.0);
    CriterionWorkspace ws;
    std::span<double> grad = want_grad ? std::span<double>(out.gradient) : std::span<double>{};

    if (set == CriterionSet::B) {
        // Two phases: the gradient of each path needs the batch mean. The
        // sweeps are cached when that fits comfortably in memory.
        const std::size_t sweep_len = static_cast<std::size_t>(inst.grid.n_steps) * static_cast<std::size_t>(inst.noise_dim);
        const bool cache = want_grad && static_cast<std::size_t>(m_count) * sweep_len <= (std::size_t{8} << 20);
        std::vector<std::vector<double>> z_cache, y_cache;
        if (cache) {
            z_cache.resize(static_cast<std::size_t>(m_count));
            y_cache.resize(static_cast<std::size_t>(m_count));
        }
        std::vector<double> starts(static_cast<std::size_t>(m_count));
        for (int m = 0; m < m_count; ++m) {
            auto& z = cache ? z_cache[static_cast<std::size_t>(m)] : ws.z_nodes;
            auto& y = cache ? y_cache[static_cast<std::size_t>(m)] : ws.ytilde;
            tilde_sweep(inst, trial, set, m, z, y);
            starts[static_cast<std::size_t>(m)] = y[0];
        }
        double mean = 0.0;
        for (double v : starts) mean += v;
        mean /= static_cast<double>(m_count);
        double acc = 0.0;
        for (double v : starts) acc += (v - mean) * (v - mean);
        out.value = acc / static_cast<double>(m_count - 1);  // unbiased sample variance
        if (want_grad) {
            const double inv_weight = 1.0 / static_cast<double>(m_count - 1);
            for (int m = 0; m < m_count; ++m) {
                if (!cache) tilde_sweep(inst, trial, set, m, ws.z_nodes, ws.ytilde);
                const auto& z = cache ? z_cache[static_cast<std::size_t>(m)] : ws.z_nodes;
                const auto& y = cache ? y_cache[static_cast<std::size_t>(m)] : ws.ytilde;
                path_process(inst, trial, set, m, ws, z, y, trial.y0, inv_weight, mean, grad);
            }
        }
        return out;
    }

    const double inv_weight = 1.0 / static_cast<double>(m_count);
    double acc = 0.0;
    for (int m = 0; m < m_count; ++m) {
        tilde_sweep(inst, trial, set, m, ws.z_nodes, ws.ytilde);
        acc += path_process(inst, trial, set, m, ws, ws.z_nodes, ws.ytilde, trial.y0, inv_weight, 0.0, grad);
    }
    out.value = acc * inv_weight;
    return out;
}

}  // namespace detail

/// Monte-Carlo value of the selected criterion over the instance's batch.
/// Set B uses the unbiased sample variance (the 1/(M-1) normalization).
inline double criterion_value(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set,
                              TimeMeasure measure) {
    return detail::criterion_eval(inst, trial, set, measure, false).value;
}

/// Value and exact reverse-mode gradient of the Monte-Carlo criterion with
/// respect to every trial parameter. Set B differentiates through the batch
/// mean (the centering term cancels identically, which the finite-difference
/// oracle confirms).
inline CriterionEval criterion_value_and_grad(const BsdeInstance& inst, const TrialSolution& trial,
                                              CriterionSet set, TimeMeasure measure) {
    return detail::criterion_eval(inst, trial, set, measure, true);
}

inline std::vector<double> criterion_grad(const BsdeInstance& inst, const TrialSolution& trial, CriterionSet set,
                                          TimeMeasure measure) {
    return detail::criterion_eval(inst, trial, set, measure, true).gradient;
}

}  // namespace fbsde
