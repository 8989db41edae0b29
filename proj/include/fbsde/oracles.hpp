#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsde/criterion.hpp"
#include "fbsde/rng.hpp"

namespace fbsde {

/// Closed-form backward solution used as a test reference: Y and Z as exact
/// functions of (s, state) together with the optimal trial parameters.
struct OracleSolution {
    std::function<double(double, std::span<const double>)> y;
    std::function<void(double, std::span<const double>, std::span<double>)> z;
    double theta_value = 0.0;     // optimal quadratic value coefficient
    double theta_gradient = 0.0;  // optimal quadratic gradient coefficient
    double y0 = 0.0;              // Y at the start node
};

/// Experiment 1 reference: terminal ||W_T||^2 / n with unit running rate
/// solves to Y_s = ||W_s||^2 / n, Z_s = 2 W_s / n, so both quadratic
/// coefficients are 1/n and the start value is 0.
inline OracleSolution example1_oracle(int n) {
    if (n < 1) throw std::invalid_argument("example1_oracle: dimension must be positive");
    OracleSolution sol;
    const double inv_n = 1.0 / static_cast<double>(n);
    sol.y = [inv_n](double, std::span<const double> w) {
        double q = 0.0;
        for (double v : w) q += v * v;
        return q * inv_n;
    };
    sol.z = [inv_n](double, std::span<const double> w, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * inv_n * w[i];
    };
    sol.theta_value = inv_n;
    sol.theta_gradient = inv_n;
    sol.y0 = 0.0;
    return sol;
}

/// Experiment 2 reference: same quadratic solution expressed in the forward
/// state X with drift -b0 X, generator base -1 and coupling b0 X.
inline OracleSolution example2_oracle(int n, double b0) {
    (void)b0;  // the quadratic solution's coefficients do not depend on b0
    OracleSolution sol = example1_oracle(n);
    return sol;
}

struct VStarEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int n_samples = 0;
};

/// Monte-Carlo evaluation of the Hopf-Cole representation of the optimal
/// cost of the log-terminal LQ family:
///   v*(t, x) = -(2 / bhat0^2) log E exp(-(bhat0^2 / 2) G),
///   G = log((1 + ||x + sigma0 eps||^2) / 2),  eps ~ N(0, (T - t) I).
/// The inner mean is computed in log-sum-exp form so large exponents cannot
/// underflow; the standard error comes from the delta method on the inner
/// mean. Rejects bhat0 = 0 (take the direct expectation E[G] instead).
inline VStarEstimate hopf_cole_v_star(double t, std::span<const double> x, double horizon, double sigma0,
                                      double bhat0, int n, int n_samples, std::uint64_t seed) {
    if (bhat0 == 0.0)
        throw std::invalid_argument(
            "hopf_cole_v_star: bhat0 = 0 has no Hopf-Cole form; use the direct expectation of the terminal cost");
    if (n_samples < 1) throw std::invalid_argument("hopf_cole_v_star: need at least one sample");
    if (!(horizon > t)) throw std::invalid_argument("hopf_cole_v_star: horizon must exceed t");
    if (x.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("hopf_cole_v_star: x dimension mismatch");

    const double sd = std::sqrt(horizon - t);
    const double half_b2 = 0.5 * bhat0 * bhat0;
    std::vector<double> exponents(static_cast<std::size_t>(n_samples));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_samples; ++i) {
        std::vector<double> eps(static_cast<std::size_t>(n));
        standard_normal_block(seed, static_cast<std::uint64_t>(i), 0, eps.data(), n);
        double q = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = x[static_cast<std::size_t>(j)] + sigma0 * sd * eps[static_cast<std::size_t>(j)];
            q += v * v;
        }
        exponents[static_cast<std::size_t>(i)] = -half_b2 * std::log((1.0 + q) / 2.0);
    }

    const double peak = *std::max_element(exponents.begin(), exponents.end());
    double mean_shifted = 0.0;
    for (double e : exponents) mean_shifted += std::exp(e - peak);
    mean_shifted /= static_cast<double>(n_samples);
    double var_shifted = 0.0;
    for (double e : exponents) {
        const double dlt = std::exp(e - peak) - mean_shifted;
        var_shifted += dlt * dlt;
    }
    var_shifted = n_samples > 1 ? var_shifted / static_cast<double>(n_samples - 1) : 0.0;

    VStarEstimate est;
    est.value = -(std::log(mean_shifted) + peak) / half_b2;
    // delta method: |d v / d mean| = 1 / (half_b2 * mean); the peak shift cancels.
    est.stderr_ = std::sqrt(var_shifted / static_cast<double>(n_samples)) / (half_b2 * mean_shifted);
    est.n_samples = n_samples;
    return est;
}

/// Population values of the criteria on experiment 1's quadratic trials:
///   Set B:  2 n (theta_z - 1/n)^2 (T - t)^2
///   Set D:  (4/3) n (theta_z - 1/n)^2 (T - t)^3
///             + (theta_y - 1/n)^2 n (n + 2) (T - t)^3 / 3
/// (Set C is Set D at theta_z = 0.) Derived from the Ito isometry and
/// E||W_s||^4 = n (n + 2) (s - t)^2.
inline double closed_form_criterion(int example, CriterionSet set, double theta_value, double theta_gradient,
                                    int n, double t, double horizon) {
    if (example != 1) throw std::invalid_argument("closed_form_criterion: only experiment 1 has closed forms");
    const double span = horizon - t;
    const double dz = theta_gradient - 1.0 / static_cast<double>(n);
    const double dv = theta_value - 1.0 / static_cast<double>(n);
    switch (set) {
        case CriterionSet::B:
            return 2.0 * static_cast<double>(n) * dz * dz * span * span;
        case CriterionSet::D:
            return (4.0 / 3.0) * static_cast<double>(n) * dz * dz * span * span * span +
                   dv * dv * static_cast<double>(n) * static_cast<double>(n + 2) * span * span * span / 3.0;
        default:
            throw std::invalid_argument("closed_form_criterion: unsupported (example, set) combination");
    }
}

}  // namespace fbsde
