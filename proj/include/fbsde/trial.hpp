#pragma once

#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/models.hpp"

namespace fbsde {

/// The optimizable triple: a standalone start value y0, a scalar value model
/// and a d-vector gradient model. Parameters flatten to [y0 | value | gradient]
/// with stable offsets; flatten/unflatten round-trips exactly.
struct TrialSolution {
    double y0 = 0.0;
    std::unique_ptr<Model> value_model;
    std::unique_ptr<Model> gradient_model;

    TrialSolution() = default;
    TrialSolution(double y0_init, std::unique_ptr<Model> value, std::unique_ptr<Model> gradient)
        : y0(y0_init), value_model(std::move(value)), gradient_model(std::move(gradient)) {}
    TrialSolution(TrialSolution&&) = default;
    TrialSolution& operator=(TrialSolution&&) = default;
    TrialSolution(const TrialSolution& other)
        : y0(other.y0),
          value_model(other.value_model ? other.value_model->clone() : nullptr),
          gradient_model(other.gradient_model ? other.gradient_model->clone() : nullptr) {}
    TrialSolution& operator=(const TrialSolution& other) {
        if (this != &other) *this = TrialSolution(other);
        return *this;
    }

    int param_count() const {
        return 1 + (value_model ? value_model->param_count() : 0) +
               (gradient_model ? gradient_model->param_count() : 0);
    }
    int value_offset() const { return 1; }
    int gradient_offset() const { return 1 + (value_model ? value_model->param_count() : 0); }

    std::vector<double> get_params() const {
        std::vector<double> p(static_cast<std::size_t>(param_count()));
        p[0] = y0;
        if (value_model)
            value_model->get_params({p.data() + value_offset(), static_cast<std::size_t>(value_model->param_count())});
        if (gradient_model)
            gradient_model->get_params(
                {p.data() + gradient_offset(), static_cast<std::size_t>(gradient_model->param_count())});
        return p;
    }

    void set_params(std::span<const double> p) {
        if (p.size() != static_cast<std::size_t>(param_count()))
            throw std::invalid_argument("TrialSolution::set_params: size mismatch");
        y0 = p[0];
        if (value_model)
            value_model->set_params(
                {p.data() + value_offset(), static_cast<std::size_t>(value_model->param_count())});
        if (gradient_model)
            gradient_model->set_params(
                {p.data() + gradient_offset(), static_cast<std::size_t>(gradient_model->param_count())});
    }
};

namespace detail {

inline void write_model_header(std::ostream& os, const char* role, const Model& m) {
    os << role << ' ' << m.kind() << " state_dim=" << m.state_dim() << " out=" << m.output_dim();
    if (const auto* mlp = dynamic_cast<const MlpModel*>(&m))
        os << " hidden=" << mlp->hidden_dim() << " seed=" << mlp->init_seed();
    os << '\n';
}

inline std::unique_ptr<Model> read_model_header(std::istream& is) {
    std::string role, kind;
    is >> role >> kind;
    int state_dim = 0, out = 0, hidden = 0;
    std::uint64_t seed = 0;
    std::string tok;
    while (is.peek() != '\n' && is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("trial snapshot: malformed header token " + tok);
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "state_dim") state_dim = std::stoi(val);
        else if (key == "out") out = std::stoi(val);
        else if (key == "hidden") hidden = std::stoi(val);
        else if (key == "seed") seed = std::stoull(val);
        else throw std::runtime_error("trial snapshot: unknown header key " + key);
    }
    if (kind == "quad_value") return std::make_unique<QuadraticValueModel>(0.0, state_dim);
    if (kind == "quad_grad") return std::make_unique<QuadraticGradientModel>(0.0, state_dim);
    if (kind == "mlp") return std::make_unique<MlpModel>(state_dim, hidden, out, seed);
    throw std::runtime_error("trial snapshot: unknown model kind " + kind);
}

}  // namespace detail

/// Plain-text parameter snapshot: a header describing each model followed by
/// the flat parameter list, one value per line, full precision.
inline void save_trial_snapshot(const TrialSolution& trial, std::ostream& os) {
    os << "fbsde-trial v1\n";
    detail::write_model_header(os, "value", *trial.value_model);
    detail::write_model_header(os, "gradient", *trial.gradient_model);
    const std::vector<double> p = trial.get_params();
    os << "params " << p.size() << '\n';
    char buf[64];
    for (double v : p) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << '\n';
    }
}

inline void save_trial_snapshot(const TrialSolution& trial, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_trial_snapshot: cannot open " + path);
    save_trial_snapshot(trial, os);
}

inline TrialSolution load_trial_snapshot(std::istream& is) {
    std::string magic, version;
    is >> magic >> version;
    if (magic != "fbsde-trial" || version != "v1") throw std::runtime_error("trial snapshot: bad magic");
    TrialSolution trial;
    trial.value_model = detail::read_model_header(is);
    trial.gradient_model = detail::read_model_header(is);
    std::string tag;
    std::size_t count = 0;
    is >> tag >> count;
    if (tag != "params") throw std::runtime_error("trial snapshot: missing params section");
    std::vector<double> p(count);
    for (double& v : p)
        if (!(is >> v)) throw std::runtime_error("trial snapshot: truncated parameter list");
    trial.set_params(p);
    return trial;
}

inline TrialSolution load_trial_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_trial_snapshot: cannot open " + path);
    return load_trial_snapshot(is);
}

}  // namespace fbsde
