#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbsde {

/// Diffusion coefficient sigma(t, x) in R^{n x d}. The common case in this
/// library is a constant scalar multiple of the identity (n == d); a general
/// row-major matrix callback is supported as well.
struct DiffusionSpec {
    double scalar = 1.0;
    std::function<void(double, std::span<const double>, std::span<double>)> matrix;  // fills n*d row-major

    bool is_scalar() const { return !matrix; }
};

inline DiffusionSpec scalar_diffusion(double value) {
    DiffusionSpec d;
    d.scalar = value;
    return d;
}

/// Componentwise projection onto the control box [-bound, bound]^m.
inline void clip_to_box(std::span<double> a, double bound) {
    for (double& v : a) v = std::clamp(v, -bound, bound);
}

/// A finite-horizon controlled diffusion with separable costs.
///
/// The drift consumed by the integrators is always
///     base_drift(t, x) + sigma(t, x) * control_drift(t, x, a),
/// i.e. the control enters only through the diffusion channel. The
/// minimizer callback must return a control inside the box; the library
/// trusts but verifies via clipping in the canonical constructors.
struct ControlProblem {
    int state_dim = 0;
    int noise_dim = 0;
    int control_dim = 0;
    double control_bound = 1.0;  // A = [-control_bound, control_bound]^m

    std::function<void(double, std::span<const double>, std::span<double>)> base_drift;  // -> R^n, null means 0
    DiffusionSpec diffusion;
    std::function<void(double, std::span<const double>, std::span<const double>, std::span<double>)>
        control_drift;  // (t, x, a) -> R^d, null means 0
    std::function<double(double, std::span<const double>, std::span<const double>)> running_cost;  // f(t, x, a)
    std::function<double(std::span<const double>)> terminal_cost;                                  // g(x)
    std::function<void(double, std::span<const double>, std::span<const double>, std::span<double>)>
        minimizer;  // (t, x, z) -> argmin_a { <control_drift(t,x,a), z> + f(t,x,a) }, valued in A
};

/// A feedback control policy (s, x) -> a in A. Policies are immutable values
/// and safe to evaluate concurrently.
struct Policy {
    std::string tag;
    std::function<void(double, std::span<const double>, std::span<double>)> act;
};

/// Linear feedback a = clip(gain * x). Requires control_dim == state_dim.
inline Policy linear_policy(const ControlProblem& problem, double gain) {
    if (problem.control_dim != problem.state_dim)
        throw std::invalid_argument("linear_policy: control and state dimensions differ");
    const double bound = problem.control_bound;
    Policy p;
    p.tag = "linear(" + std::to_string(gain) + ")";
    p.act = [gain, bound](double, std::span<const double> x, std::span<double> a) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(gain * x[i], -bound, bound);
    };
    return p;
}

inline Policy zero_policy(const ControlProblem& problem) {
    Policy p = linear_policy(problem, 0.0);
    p.tag = "zero";
    return p;
}

/// Policy-improvement construction: alpha'(s, x) = minimizer(s, x, z(s, x)).
inline Policy improved_policy(const ControlProblem& problem,
                              std::function<void(double, std::span<const double>, std::span<double>)> z_fn,
                              std::string tag = "improved") {
    if (!problem.minimizer) throw std::invalid_argument("improved_policy: problem has no minimizer");
    const int d = problem.noise_dim;
    auto minimize = problem.minimizer;
    Policy p;
    p.tag = std::move(tag);
    p.act = [z_fn = std::move(z_fn), minimize, d](double s, std::span<const double> x, std::span<double> a) {
        thread_local std::vector<double> z;
        z.resize(static_cast<std::size_t>(d));
        z_fn(s, x, z);
        minimize(s, x, z, a);
    };
    return p;
}

/// The log-terminal linear-quadratic family:
///   dynamics  dX = sigma0 * (bhat0 * a dt + dW),     X in R^n, a in A
///   cost      int ||a||^2 dt + log((1 + ||X_T||^2) / 2).
/// The running cost is quadratic and separable, so the box-constrained
/// minimizer is the clipped unconstrained one: a = clip(-bhat0 * z / 2).
inline ControlProblem lq_log_problem(double sigma0, double bhat0, double control_bound, int n) {
    if (!(sigma0 > 0.0)) throw std::invalid_argument("lq_log_problem: sigma0 must be positive");
    if (!(control_bound > 0.0)) throw std::invalid_argument("lq_log_problem: control_bound must be positive");
    if (n < 1) throw std::invalid_argument("lq_log_problem: dimension must be positive");

    ControlProblem p;
    p.state_dim = n;
    p.noise_dim = n;
    p.control_dim = n;
    p.control_bound = control_bound;
    p.diffusion = scalar_diffusion(sigma0);
    p.control_drift = [bhat0](double, std::span<const double>, std::span<const double> a, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = bhat0 * a[i];
    };
    p.running_cost = [](double, std::span<const double>, std::span<const double> a) {
        double q = 0.0;
        for (double v : a) q += v * v;
        return q;
    };
    p.terminal_cost = [](std::span<const double> x) {
        double q = 0.0;
        for (double v : x) q += v * v;
        return std::log((1.0 + q) / 2.0);
    };
    p.minimizer = [bhat0, control_bound](double, std::span<const double>, std::span<const double> z,
                                         std::span<double> a) {
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = std::clamp(-0.5 * bhat0 * z[i], -control_bound, control_bound);
    };
    return p;
}

}  // namespace fbsde
