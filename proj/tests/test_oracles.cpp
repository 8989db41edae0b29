#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fbsde/experiments.hpp"
#include "fbsde/oracles.hpp"
#include "test_support.hpp"

using namespace fbsde;

TEST_CASE("example 1 oracle values") {
    const OracleSolution sol = example1_oracle(100);
    CHECK(sol.theta_value == doctest::Approx(0.01));
    CHECK(sol.theta_gradient == doctest::Approx(0.01));
    CHECK(sol.y0 == doctest::Approx(0.0));

    std::vector<double> w(100, 0.0);
    CHECK(sol.y(0.0, w) == doctest::Approx(0.0));
    w[0] = 1.0;
    std::vector<double> z(100);
    sol.z(0.3, w, z);
    CHECK(z[0] == doctest::Approx(2.0 / 100.0));
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK_THROWS_AS(example1_oracle(0), std::invalid_argument);
}

TEST_CASE("example 2 oracle values and generator identity") {
    const int n = 100;
    const double b0 = -0.1;
    const OracleSolution sol = example2_oracle(n, b0);
    CHECK(sol.theta_value == doctest::Approx(0.01));
    CHECK(sol.theta_gradient == doctest::Approx(0.01));

    std::vector<double> x(n, 0.0);
    std::vector<double> z(n);
    CHECK(sol.y(0.2, x) == doctest::Approx(0.0));
    sol.z(0.2, x, z);
    for (double v : z) CHECK(v == doctest::Approx(0.0));

    // instance generator at the exact Z reproduces -1 + <b0 X, 2X/n>
    const TimeGrid grid = make_grid(0.0, 1.0, 20);
    const BsdeInstance inst = example2_instance(n, b0, grid, 4, 5);
    for (int m = 0; m < 4; ++m)
        for (int k = 0; k < grid.n_steps; ++k) {
            auto xs = inst.paths->at(m, k);
            sol.z(grid.node(k), xs, z);
            double f = inst.base_at(m, k);
            auto c = inst.coupling_at(m, k);
            double q = 0.0;
            for (int i = 0; i < n; ++i) {
                f += c[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
                q += xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
            }
            CHECK(f == doctest::Approx(-1.0 + b0 * 2.0 * q / n).epsilon(1e-12));
        }
}

TEST_CASE("oracle self-consistency: discrete sweep reproduces Y at rate O(dt)") {
    const int n = 10;

    auto residual_mse = [&](int steps, int example) {
        const TimeGrid grid = make_grid(0.0, 1.0, steps);
        const int paths = 256;
        const BsdeInstance inst =
            example == 1 ? example1_instance(n, grid, paths, 99) : example2_instance(n, -0.1, grid, paths, 99);
        const OracleSolution sol = example == 1 ? example1_oracle(n) : example2_oracle(n, -0.1);
        TrialSolution trial;
        trial.value_model = std::make_unique<QuadraticValueModel>(sol.theta_value, n);
        trial.gradient_model = std::make_unique<QuadraticGradientModel>(sol.theta_gradient, n);
        const std::vector<double> yt = tilde_y(inst, trial, CriterionSet::D);
        double acc = 0.0;
        for (int m = 0; m < paths; ++m)
            for (int k = 0; k <= steps; ++k) {
                const double y = sol.y(grid.node(k), inst.paths->at(m, k));
                const double diff = yt[static_cast<std::size_t>(m * (steps + 1) + k)] - y;
                acc += diff * diff;
            }
        return acc / (static_cast<double>(paths) * (steps + 1));
    };

    for (int example : {1, 2}) {
        const double coarse = residual_mse(50, example);
        const double fine = residual_mse(100, example);
        CHECK(coarse / fine == doctest::Approx(2.0).epsilon(0.45));  // first-order decay
        CHECK(fine < 1e-2);
    }
}

TEST_CASE("closed-form criterion values") {
    CHECK(closed_form_criterion(1, CriterionSet::B, 0.0, -1.0, 100, 0.0, 1.0) == doctest::Approx(204.02));
    // exact trial zeroes both terms of Set D
    CHECK(closed_form_criterion(1, CriterionSet::D, 0.01, 0.01, 100, 0.0, 1.0) == doctest::Approx(0.0));
    // zero z-trial leaves the irreducible double-integral floor 4/(3n)
    CHECK(closed_form_criterion(1, CriterionSet::D, 0.01, 0.0, 100, 0.0, 1.0) ==
          doctest::Approx(4.0 / 300.0).epsilon(1e-12));
    // value-term magnitude at theta_y = -1: (1.01)^2 * 100 * 102 / 3
    const double d = closed_form_criterion(1, CriterionSet::D, -1.0, 0.01, 100, 0.0, 1.0);
    CHECK(d == doctest::Approx(3468.34));
    CHECK_THROWS_AS(closed_form_criterion(2, CriterionSet::B, 0.0, 0.0, 100, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(closed_form_criterion(1, CriterionSet::A, 0.0, 0.0, 100, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("closed forms match Monte-Carlo estimates across trial parameters") {
    const int n = 100;
    const TimeGrid grid = make_grid(0.0, 1.0, 100);
    const int paths = 10000;
    const BsdeInstance inst = example1_instance(n, grid, paths, 321);

    for (const auto& [theta_v, theta_z, set] :
         {std::tuple{0.01, -0.4, CriterionSet::B}, std::tuple{0.01, 0.35, CriterionSet::B},
          std::tuple{-0.25, 0.3, CriterionSet::D}, std::tuple{0.4, -0.15, CriterionSet::D}}) {
        TrialSolution trial;
        trial.value_model = std::make_unique<QuadraticValueModel>(theta_v, n);
        trial.gradient_model = std::make_unique<QuadraticGradientModel>(theta_z, n);
        const testsup::Estimate est = testsup::criterion_estimate(inst, trial, set);
        CHECK(est.value == doctest::Approx(criterion_value(inst, trial, set, measure_for(set))).epsilon(1e-10));
        const double closed = closed_form_criterion(1, set, theta_v, theta_z, n, 0.0, 1.0);
        // 3 sigma of the Monte-Carlo estimate plus a 2% discretization allowance
        CHECK(std::abs(est.value - closed) <= 3.0 * est.stderr_ + 0.02 * closed);
    }
}

TEST_CASE("hopf-cole estimate: determinism and coupling limit") {
    const int n = 20;
    const std::vector<double> x0(n, 0.0);
    const VStarEstimate a = hopf_cole_v_star(0.0, x0, 1.0, std::numbers::sqrt2, 1.0, n, 12800, 1);
    const VStarEstimate b = hopf_cole_v_star(0.0, x0, 1.0, std::numbers::sqrt2, 1.0, n, 12800, 1);
    CHECK(a.value == b.value);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.stderr_ > 0.0);

    CHECK_THROWS_AS(hopf_cole_v_star(0.0, x0, 1.0, std::numbers::sqrt2, 0.0, n, 100, 1), std::invalid_argument);

    // tiny coupling: v* approaches the plain expectation of the terminal cost
    const double sigma0 = std::numbers::sqrt2;
    const VStarEstimate small = hopf_cole_v_star(0.0, x0, 1.0, sigma0, 1e-3, n, 200000, 7);
    const int samples = 200000;
    std::vector<double> g(samples);
    std::vector<double> eps(n);
    for (int i = 0; i < samples; ++i) {
        standard_normal_block(8, static_cast<std::uint64_t>(i), 0, eps.data(), n);
        double q = 0.0;
        for (double e : eps) q += sigma0 * e * sigma0 * e;
        g[static_cast<std::size_t>(i)] = std::log((1.0 + q) / 2.0);
    }
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= samples;
    double var = 0.0;
    for (double v : g) var += (v - mean) * (v - mean);
    var /= (samples - 1);
    const double se = std::sqrt(var / samples);
    const double combined = std::sqrt(se * se + small.stderr_ * small.stderr_);
    CHECK(std::abs(small.value - mean) <= 3.0 * combined);
}

TEST_CASE("hopf-cole standard error shrinks like 1/sqrt(M)") {
    const int n = 100;
    const std::vector<double> x0(n, 0.0);
    const double se800 = hopf_cole_v_star(0.0, x0, 1.0, std::numbers::sqrt2, 1.0, n, 800, 3).stderr_;
    const double se12800 = hopf_cole_v_star(0.0, x0, 1.0, std::numbers::sqrt2, 1.0, n, 12800, 3).stderr_;
    const double se204800 = hopf_cole_v_star(0.0, x0, 1.0, std::numbers::sqrt2, 1.0, n, 204800, 3).stderr_;
    CHECK(se800 / se12800 == doctest::Approx(4.0).epsilon(0.25));
    CHECK(se12800 / se204800 == doctest::Approx(4.0).epsilon(0.25));
}
