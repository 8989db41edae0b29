#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "fbsde/models.hpp"
#include "fbsde/rng.hpp"
#include "fbsde/trial.hpp"

using namespace fbsde;

namespace {

std::vector<double> random_vector(std::uint64_t seed, int n, double scale = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    standard_normal_block(seed, 0, 0, v.data(), n);
    for (double& x : v) x *= scale;
    return v;
}

double rel_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        norm += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-30);
}

}  // namespace

TEST_CASE("quadratic value model") {
    QuadraticValueModel m(0.01, 3);
    const std::vector<double> x = {10.0, 0.0, 0.0};  // ||x||^2 = 100
    CHECK(m.eval_scalar(0.5, x) == doctest::Approx(1.0));

    std::vector<double> grad(1, 0.0);
    const double up = 1.0;
    m.accumulate_param_grad(0.5, x, {&up, 1}, grad);
    CHECK(grad[0] == doctest::Approx(100.0));

    std::vector<double> gx(3);
    m.input_grad(0.5, x, gx);
    CHECK(gx[0] == doctest::Approx(2.0 * 0.01 * 10.0));
    CHECK(gx[1] == doctest::Approx(0.0));

    grad[0] = 0.0;
    const double zero_up = 0.0;
    m.accumulate_param_grad(0.5, x, {&zero_up, 1}, grad);
    CHECK(grad[0] == doctest::Approx(0.0));

    // output is homogeneous in theta
    QuadraticValueModel m3(0.03, 3);
    CHECK(m3.eval_scalar(0.1, x) == doctest::Approx(3.0 * m.eval_scalar(0.1, x)));
}

TEST_CASE("quadratic gradient model matches the reference field") {
    const int n = 5;
    QuadraticGradientModel z(1.0 / 100.0, n);
    const std::vector<double> w = random_vector(7, n, 2.0);
    std::vector<double> out(n);
    z.eval(0.25, w, out);
    for (int i = 0; i < n; ++i) CHECK(out[i] == doctest::Approx(2.0 * w[i] / 100.0).epsilon(1e-14));

    std::vector<double> grad(1, 0.0);
    const std::vector<double> up = random_vector(8, n);
    z.accumulate_param_grad(0.25, w, up, grad);
    double expect = 0.0;
    for (int i = 0; i < n; ++i) expect += 2.0 * up[i] * w[i];
    CHECK(grad[0] == doctest::Approx(expect).epsilon(1e-14));

    CHECK_THROWS_AS(z.input_grad(0.25, w, out), std::logic_error);
}

TEST_CASE("mlp forward basics") {
    MlpModel m(4, 16, 1, 99);
    std::vector<double> zero(static_cast<std::size_t>(m.param_count()), 0.0);
    MlpModel all_zero = m;
    all_zero.set_params(zero);
    const std::vector<double> x = random_vector(3, 4, 2.0);
    CHECK(all_zero.eval_scalar(0.7, x) == doctest::Approx(0.0));

    // deterministic init and forward
    MlpModel again(4, 16, 1, 99);
    CHECK(again.eval_scalar(0.7, x) == m.eval_scalar(0.7, x));
}

TEST_CASE("mlp parameter gradient matches finite differences") {
    for (int out_dim : {1, 3}) {
        MlpModel m(3, 8, out_dim, 1234 + out_dim);
        const std::vector<double> x = random_vector(41, 3, 1.5);
        const std::vector<double> up = random_vector(42, out_dim);
        const double s = 0.37;

        std::vector<double> analytic(static_cast<std::size_t>(m.param_count()), 0.0);
        m.accumulate_param_grad(s, x, up, analytic);

        std::vector<double> p0(static_cast<std::size_t>(m.param_count()));
        m.get_params(p0);
        auto fn = [&](std::span<const double> p) {
            MlpModel probe = m;
            probe.set_params(p);
            std::vector<double> y(static_cast<std::size_t>(out_dim));
            probe.eval(s, x, y);
            double acc = 0.0;
            for (int o = 0; o < out_dim; ++o) acc += up[static_cast<std::size_t>(o)] * y[static_cast<std::size_t>(o)];
            return acc;
        };
        const std::vector<double> numeric = fd_grad(fn, p0, 1e-5);
        CHECK(rel_error(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("mlp input gradient matches finite differences") {
    MlpModel m(4, 16, 1, 77);
    const std::vector<double> x = random_vector(43, 4, 1.2);
    const double s = 0.81;
    std::vector<double> analytic(4);
    m.input_grad(s, x, analytic);

    std::vector<double> numeric(4);
    const double h = 1e-5;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> xp = x, xm = x;
        xp[static_cast<std::size_t>(i)] += h;
        xm[static_cast<std::size_t>(i)] -= h;
        numeric[static_cast<std::size_t>(i)] = (m.eval_scalar(s, xp) - m.eval_scalar(s, xm)) / (2.0 * h);
    }
    CHECK(rel_error(analytic, numeric) < 1e-6);

    MlpModel vec(4, 16, 2, 78);
    std::vector<double> gx(4);
    CHECK_THROWS_AS(vec.input_grad(s, x, gx), std::logic_error);
}

TEST_CASE("mlp with zero first layer is constant in x") {
    MlpModel m(3, 8, 1, 5);
    std::vector<double> p(static_cast<std::size_t>(m.param_count()));
    m.get_params(p);
    // first layer = weights (8 x 4) then biases (8)
    for (int i = 0; i < 8 * 4; ++i) p[static_cast<std::size_t>(i)] = 0.0;
    m.set_params(p);
    const std::vector<double> xa = random_vector(51, 3, 2.0);
    const std::vector<double> xb = random_vector(52, 3, 2.0);
    CHECK(m.eval_scalar(0.2, xa) == doctest::Approx(m.eval_scalar(0.9, xb)));
    std::vector<double> gx(3);
    m.input_grad(0.4, xa, gx);
    for (double v : gx) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("mlp output is invariant under hidden-unit permutation") {
    const int n = 3, hidden = 6, out = 2;
    MlpModel m(n, hidden, out, 11);
    std::vector<double> p(static_cast<std::size_t>(m.param_count()));
    m.get_params(p);

    // rotate hidden units by one: rows of W1/b1 and columns of W2
    std::vector<double> q = p;
    const int in = n + 1;
    auto w1 = [&](std::vector<double>& v, int j, int i) -> double& { return v[static_cast<std::size_t>(j * in + i)]; };
    auto b1 = [&](std::vector<double>& v, int j) -> double& { return v[static_cast<std::size_t>(hidden * in + j)]; };
    auto w2 = [&](std::vector<double>& v, int o, int j) -> double& {
        return v[static_cast<std::size_t>(hidden * in + hidden + o * hidden + j)];
    };
    for (int j = 0; j < hidden; ++j) {
        const int src = (j + 1) % hidden;
        for (int i = 0; i < in; ++i) w1(q, j, i) = w1(p, src, i);
        b1(q, j) = b1(p, src);
        for (int o = 0; o < out; ++o) w2(q, o, j) = w2(p, o, src);
    }
    MlpModel permuted = m;
    permuted.set_params(q);

    const std::vector<double> x = random_vector(13, n, 1.4);
    std::vector<double> ya(out), yb(out);
    m.eval(0.45, x, ya);
    permuted.eval(0.45, x, yb);
    for (int o = 0; o < out; ++o) CHECK(ya[static_cast<std::size_t>(o)] == doctest::Approx(yb[static_cast<std::size_t>(o)]).epsilon(1e-14));
}

TEST_CASE("fd_grad oracle behaves on known functions") {
    auto sum_sq = [](std::span<const double> p) {
        double acc = 0.0;
        for (double v : p) acc += v * v;
        return acc;
    };
    const std::vector<double> at = {1.0, 2.0};
    const std::vector<double> g = fd_grad(sum_sq, at, 1e-5);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));

    auto constant = [](std::span<const double>) { return 3.0; };
    for (double v : fd_grad(constant, at, 1e-5)) CHECK(v == doctest::Approx(0.0));

    CHECK_THROWS_AS(fd_grad(sum_sq, at, 0.0), std::invalid_argument);
}

TEST_CASE("trial solution flatten round trip") {
    TrialSolution trial;
    trial.y0 = 0.75;
    trial.value_model = std::make_unique<MlpModel>(3, 8, 1, 21);
    trial.gradient_model = std::make_unique<MlpModel>(3, 8, 3, 22);

    const std::vector<double> p = trial.get_params();
    CHECK(static_cast<int>(p.size()) == trial.param_count());
    CHECK(p[0] == doctest::Approx(0.75));

    TrialSolution copy = trial;
    std::vector<double> shifted = p;
    for (double& v : shifted) v += 0.125;
    copy.set_params(shifted);
    CHECK(copy.get_params() == shifted);
    trial.set_params(p);
    CHECK(trial.get_params() == p);
}

TEST_CASE("trial snapshot round trip") {
    TrialSolution trial;
    trial.y0 = -0.5;
    trial.value_model = std::make_unique<MlpModel>(2, 4, 1, 31);
    trial.gradient_model = std::make_unique<QuadraticGradientModel>(0.25, 2);

    std::stringstream buffer;
    save_trial_snapshot(trial, buffer);
    const TrialSolution loaded = load_trial_snapshot(buffer);

    CHECK(loaded.value_model->kind() == "mlp");
    CHECK(loaded.gradient_model->kind() == "quad_grad");
    CHECK(loaded.get_params() == trial.get_params());

    const std::vector<double> x = {0.4, -1.1};
    CHECK(loaded.value_model->eval_scalar(0.3, x) == trial.value_model->eval_scalar(0.3, x));
}
