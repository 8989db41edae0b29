#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/rng.hpp"

namespace fbsde {

/// A parametric trial function (s, x) -> R^out with exact parameter and
/// input gradients. Models are immutable during evaluation; parameter writes
/// only happen between optimizer steps on one thread.
class Model {
public:
    virtual ~Model() = default;

    virtual int state_dim() const = 0;
    virtual int output_dim() const = 0;
    virtual int param_count() const = 0;

    virtual void eval(double s, std::span<const double> x, std::span<double> out) const = 0;

    /// Accumulates d<upstream, eval(s, x)>/dparams into grad (same layout as
    /// get_params).
    virtual void accumulate_param_grad(double s, std::span<const double> x, std::span<const double> upstream,
                                       std::span<double> grad) const = 0;

    /// d eval / d x for scalar-output models.
    virtual void input_grad(double s, std::span<const double> x, std::span<double> grad_x) const {
        (void)s;
        (void)x;
        (void)grad_x;
        throw std::logic_error("input_grad: only defined for scalar-output models");
    }

    virtual void get_params(std::span<double> out) const = 0;
    virtual void set_params(std::span<const double> p) = 0;
    virtual std::unique_ptr<Model> clone() const = 0;
    virtual std::string kind() const = 0;

    double eval_scalar(double s, std::span<const double> x) const {
        double v = 0.0;
        eval(s, x, {&v, 1});
        return v;
    }
};

/// q(x) = theta * ||x||^2. Linear in its single parameter; q(0) = 0.
class QuadraticValueModel final : public Model {
public:
    QuadraticValueModel(double theta, int state_dim) : theta_(theta), n_(state_dim) {}

    int state_dim() const override { return n_; }
    int output_dim() const override { return 1; }
    int param_count() const override { return 1; }

    void eval(double, std::span<const double> x, std::span<double> out) const override {
        out[0] = theta_ * squared_norm(x);
    }
    void accumulate_param_grad(double, std::span<const double> x, std::span<const double> upstream,
                               std::span<double> grad) const override {
        grad[0] += upstream[0] * squared_norm(x);
    }
    void input_grad(double, std::span<const double> x, std::span<double> grad_x) const override {
        for (std::size_t i = 0; i < grad_x.size(); ++i) grad_x[i] = 2.0 * theta_ * x[i];
    }
    void get_params(std::span<double> out) const override { out[0] = theta_; }
    void set_params(std::span<const double> p) override { theta_ = p[0]; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<QuadraticValueModel>(*this); }
    std::string kind() const override { return "quad_value"; }

    double theta() const { return theta_; }

private:
    static double squared_norm(std::span<const double> x) {
        double q = 0.0;
        for (double v : x) q += v * v;
        return q;
    }
    double theta_;
    int n_;
};

/// z(x) = 2 * theta * x, the gradient field of the quadratic value model.
class QuadraticGradientModel final : public Model {
public:
    QuadraticGradientModel(double theta, int state_dim) : theta_(theta), n_(state_dim) {}

    int state_dim() const override { return n_; }
    int output_dim() const override { return n_; }
    int param_count() const override { return 1; }

    void eval(double, std::span<const double> x, std::span<double> out) const override {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * theta_ * x[i];
    }
    void accumulate_param_grad(double, std::span<const double> x, std::span<const double> upstream,
                               std::span<double> grad) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < upstream.size(); ++i) acc += upstream[i] * x[i];
        grad[0] += 2.0 * acc;
    }
    void get_params(std::span<double> out) const override { out[0] = theta_; }
    void set_params(std::span<const double> p) override { theta_ = p[0]; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<QuadraticGradientModel>(*this); }
    std::string kind() const override { return "quad_grad"; }

    double theta() const { return theta_; }

private:
    double theta_;
    int n_;
};

/// Single-hidden-layer perceptron on the raw features u = [s; x] with tanh
/// activation:  y = W2 * tanh(W1 u + b1) + b2.
/// Weights and biases initialize uniformly on [-1/sqrt(fan_in), 1/sqrt(fan_in)]
/// from the given seed.
class MlpModel final : public Model {
public:
    MlpModel(int state_dim, int hidden, int out_dim, std::uint64_t init_seed)
        : n_(state_dim), hidden_(hidden), out_(out_dim), init_seed_(init_seed) {
        if (hidden < 1 || out_dim < 1 || state_dim < 1) throw std::invalid_argument("MlpModel: bad dimensions");
        const int in = n_ + 1;
        w1_.resize(static_cast<std::size_t>(hidden_) * static_cast<std::size_t>(in));
        b1_.resize(static_cast<std::size_t>(hidden_));
        w2_.resize(static_cast<std::size_t>(out_) * static_cast<std::size_t>(hidden_));
        b2_.resize(static_cast<std::size_t>(out_));
        UniformStream rng(init_seed);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : w1_) w = rng.next(-s1, s1);
        for (double& w : b1_) w = rng.next(-s1, s1);
        const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
        for (double& w : w2_) w = rng.next(-s2, s2);
        for (double& w : b2_) w = rng.next(-s2, s2);
    }

    /// Clears the output layer so the model starts as the zero function
    /// while the hidden layer keeps its seeded init. Useful when the target
    /// is small compared to the default output scale.
    void zero_output_layer() {
        std::fill(w2_.begin(), w2_.end(), 0.0);
        std::fill(b2_.begin(), b2_.end(), 0.0);
    }

    int state_dim() const override { return n_; }
    int output_dim() const override { return out_; }
    int hidden_dim() const { return hidden_; }
    std::uint64_t init_seed() const { return init_seed_; }
    int param_count() const override {
        return static_cast<int>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
    }

    void eval(double s, std::span<const double> x, std::span<double> out) const override {
        thread_local std::vector<double> h;
        h.resize(static_cast<std::size_t>(hidden_));
        hidden_activations(s, x, h);
        for (int o = 0; o < out_; ++o) {
            const double* row = w2_.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(hidden_);
            double acc = b2_[static_cast<std::size_t>(o)];
            for (int j = 0; j < hidden_; ++j) acc += row[j] * h[static_cast<std::size_t>(j)];
            out[static_cast<std::size_t>(o)] = acc;
        }
    }

    void accumulate_param_grad(double s, std::span<const double> x, std::span<const double> upstream,
                               std::span<double> grad) const override {
        thread_local std::vector<double> h, dpre;
        h.resize(static_cast<std::size_t>(hidden_));
        dpre.resize(static_cast<std::size_t>(hidden_));
        hidden_activations(s, x, h);

        const int in = n_ + 1;
        double* gw1 = grad.data();
        double* gb1 = gw1 + w1_.size();
        double* gw2 = gb1 + b1_.size();
        double* gb2 = gw2 + w2_.size();

        for (int j = 0; j < hidden_; ++j) {
            double acc = 0.0;
            for (int o = 0; o < out_; ++o)
                acc += upstream[static_cast<std::size_t>(o)] *
                       w2_[static_cast<std::size_t>(o) * static_cast<std::size_t>(hidden_) +
                           static_cast<std::size_t>(j)];
            dpre[static_cast<std::size_t>(j)] =
                acc * (1.0 - h[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(j)]);
        }
        for (int o = 0; o < out_; ++o) {
            const double u = upstream[static_cast<std::size_t>(o)];
            double* row = gw2 + static_cast<std::size_t>(o) * static_cast<std::size_t>(hidden_);
            for (int j = 0; j < hidden_; ++j) row[j] += u * h[static_cast<std::size_t>(j)];
            gb2[o] += u;
        }
        for (int j = 0; j < hidden_; ++j) {
            const double dj = dpre[static_cast<std::size_t>(j)];
            double* row = gw1 + static_cast<std::size_t>(j) * static_cast<std::size_t>(in);
            row[0] += dj * s;
            for (int i = 0; i < n_; ++i) row[i + 1] += dj * x[static_cast<std::size_t>(i)];
            gb1[j] += dj;
        }
    }

    void input_grad(double s, std::span<const double> x, std::span<double> grad_x) const override {
        if (out_ != 1) throw std::logic_error("input_grad: only defined for scalar-output models");
        thread_local std::vector<double> h;
        h.resize(static_cast<std::size_t>(hidden_));
        hidden_activations(s, x, h);
        const int in = n_ + 1;
        for (int i = 0; i < n_; ++i) grad_x[static_cast<std::size_t>(i)] = 0.0;
        for (int j = 0; j < hidden_; ++j) {
            const double c =
                w2_[static_cast<std::size_t>(j)] *
                (1.0 - h[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(j)]);
            const double* row = w1_.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(in);
            for (int i = 0; i < n_; ++i) grad_x[static_cast<std::size_t>(i)] += c * row[i + 1];
        }
    }

    void get_params(std::span<double> out) const override {
        double* p = out.data();
        p = std::copy(w1_.begin(), w1_.end(), p);
        p = std::copy(b1_.begin(), b1_.end(), p);
        p = std::copy(w2_.begin(), w2_.end(), p);
        std::copy(b2_.begin(), b2_.end(), p);
    }
    void set_params(std::span<const double> p) override {
        const double* q = p.data();
        std::copy(q, q + w1_.size(), w1_.begin());
        q += w1_.size();
        std::copy(q, q + b1_.size(), b1_.begin());
        q += b1_.size();
        std::copy(q, q + w2_.size(), w2_.begin());
        q += w2_.size();
        std::copy(q, q + b2_.size(), b2_.begin());
    }
    std::unique_ptr<Model> clone() const override { return std::make_unique<MlpModel>(*this); }
    std::string kind() const override { return "mlp"; }

private:
    void hidden_activations(double s, std::span<const double> x, std::vector<double>& h) const {
        const int in = n_ + 1;
        for (int j = 0; j < hidden_; ++j) {
            const double* row = w1_.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(in);
            double acc = b1_[static_cast<std::size_t>(j)] + row[0] * s;
            for (int i = 0; i < n_; ++i) acc += row[i + 1] * x[static_cast<std::size_t>(i)];
            h[static_cast<std::size_t>(j)] = std::tanh(acc);
        }
    }

    int n_, hidden_, out_;
    std::uint64_t init_seed_;
    std::vector<double> w1_, b1_, w2_, b2_;
};

/// Central finite differences of a scalar function of a parameter vector.
/// Test oracle for every analytic gradient in this library.
inline std::vector<double> fd_grad(const std::function<double(std::span<const double>)>& fn,
                                   std::span<const double> at, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_grad: step must be positive");
    std::vector<double> p(at.begin(), at.end());
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = fn(p);
        p[i] = saved - h;
        const double dn = fn(p);
        p[i] = saved;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

}  // namespace fbsde
