#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbsde/csv.hpp"
#include "fbsde/gpi.hpp"
#include "fbsde/oracles.hpp"
#include "fbsde/version.hpp"

namespace fbsde {

using json = nlohmann::json;

/// One fully-specified run. The per-experiment constructors fill every field
/// with the protocol defaults; callers override what differs before running.
struct RunConfig {
    std::string experiment = "example1";  // example1 | example2 | example3 | example4 | custom
    CriterionSet set = CriterionSet::A;
    Subroutine subroutine = Subroutine::OffPolicy;
    int repeats = 10;
    std::uint64_t seed = 1;
    std::string out_dir;  // empty: keep results in memory only

    // time discretization
    double start_time = 0.0;
    double horizon = 1.0;
    int grid_steps = 100;

    // dimensions / dynamics
    int dim = 100;
    double b0 = -0.1;          // example2 forward drift coefficient
    double sigma0 = std::numbers::sqrt2;
    double bhat0 = 1.0;
    double control_bound = 100.0;
    double initial_gain = -0.1;
    double behavior_gain = -0.1;

    // optimization protocol
    OptConfig opt;
    int iterations = 9;  // policy-iteration rounds
    int mlp_hidden = 16;
    int cost_eval_batch = 4096;
    int epsilon_eval_batch = 256;
    bool warm_start = true;
    bool resample_per_step = false;  // PI evaluation data: fixed per call vs fresh per gradient step
    int vstar_samples = 12800;

    static RunConfig for_experiment(const std::string& id) {
        RunConfig cfg;
        cfg.experiment = id;
        if (id == "example1" || id == "example2") {
            cfg.repeats = 10;
            cfg.opt.lr_y0 = 0.1;
            cfg.opt.lr_value = 1e-5;
            cfg.opt.lr_gradient = 1e-3;
            cfg.opt.momentum = 0.0;
            cfg.opt.nesterov = false;
            cfg.opt.clip_norm = 0.0;
            cfg.opt.lr_decay = 1.0;
            cfg.opt.n_steps = 200;
            cfg.opt.batch_size = 16;
            return cfg;
        }
        if (id == "example3" || id == "example4" || id == "custom") {
            cfg.repeats = 5;
            cfg.sigma0 = id == "example4" ? 20.0 : std::numbers::sqrt2;
            cfg.opt.lr_y0 = 0.5;
            cfg.opt.lr_value = 0.1;
            cfg.opt.lr_gradient = 0.1;
            cfg.opt.momentum = 1e-3;
            cfg.opt.nesterov = true;
            cfg.opt.clip_norm = 10.0;
            cfg.opt.lr_decay = 0.99;
            cfg.opt.n_steps = 75;
            cfg.opt.batch_size = 16;
            return cfg;
        }
        throw std::invalid_argument("unknown experiment id: " + id);
    }

    TimeGrid grid() const { return make_grid(start_time, horizon, grid_steps); }
};

/// Forward data and generator of experiment 1: pure Brownian paths,
/// terminal ||W_T||^2 / n, decoupled unit-rate generator (f = -1).
inline BsdeInstance example1_instance(int n, const TimeGrid& grid, int batch, std::uint64_t seed) {
    auto noise = std::make_shared<BrownianBatch>(sample_brownian(grid, n, batch, seed));
    auto paths = std::make_shared<StatePathBatch>();
    paths->grid = grid;
    paths->state_dim = n;
    paths->n_paths = batch;
    paths->policy_tag = "brownian";
    paths->states.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(grid.n_steps + 1) *
                             static_cast<std::size_t>(n),
                         0.0);
    for (int m = 0; m < batch; ++m)
        for (int k = 0; k < grid.n_steps; ++k) {
            auto prev = paths->at(m, k);
            auto next = paths->at(m, k + 1);
            auto dw = noise->step(m, k);
            for (int i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] =
                prev[static_cast<std::size_t>(i)] + dw[static_cast<std::size_t>(i)];
        }

    BsdeInstance inst;
    inst.grid = grid;
    inst.noise_dim = n;
    inst.n_paths = batch;
    inst.terminal.resize(static_cast<std::size_t>(batch));
    for (int m = 0; m < batch; ++m) {
        double q = 0.0;
        for (double v : paths->at(m, grid.n_steps)) q += v * v;
        inst.terminal[static_cast<std::size_t>(m)] = q / static_cast<double>(n);
    }
    inst.generator.base.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(grid.n_steps), -1.0);
    inst.noise = std::move(noise);
    inst.paths = std::move(paths);
    inst.validate();
    return inst;
}

/// Forward data and generator of experiment 2: Euler paths of
/// dX = -b0 X dt + dW from 0, terminal ||X_T||^2 / n, and the linear-in-z
/// generator f(s, z) = -1 + <b0 X_s, z>.
inline BsdeInstance example2_instance(int n, double b0, const TimeGrid& grid, int batch, std::uint64_t seed) {
    auto noise = std::make_shared<BrownianBatch>(sample_brownian(grid, n, batch, seed));
    auto paths = std::make_shared<StatePathBatch>();
    paths->grid = grid;
    paths->state_dim = n;
    paths->n_paths = batch;
    paths->policy_tag = "ou(b0=" + format_double(b0) + ")";
    paths->states.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(grid.n_steps + 1) *
                             static_cast<std::size_t>(n),
                         0.0);
    for (int m = 0; m < batch; ++m)
        for (int k = 0; k < grid.n_steps; ++k) {
            auto prev = paths->at(m, k);
            auto next = paths->at(m, k + 1);
            auto dw = noise->step(m, k);
            for (int i = 0; i < n; ++i)
                next[static_cast<std::size_t>(i)] = prev[static_cast<std::size_t>(i)] -
                                                    b0 * prev[static_cast<std::size_t>(i)] * grid.dt +
                                                    dw[static_cast<std::size_t>(i)];
        }

    BsdeInstance inst;
    inst.grid = grid;
    inst.noise_dim = n;
    inst.n_paths = batch;
    inst.terminal.resize(static_cast<std::size_t>(batch));
    inst.generator.base.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(grid.n_steps), -1.0);
    inst.generator.coupling.resize(static_cast<std::size_t>(batch) * static_cast<std::size_t>(grid.n_steps) *
                                   static_cast<std::size_t>(n));
    for (int m = 0; m < batch; ++m) {
        for (int k = 0; k < grid.n_steps; ++k) {
            auto x = paths->at(m, k);
            double* c = inst.generator.coupling.data() +
                        (static_cast<std::size_t>(m) * static_cast<std::size_t>(grid.n_steps) +
                         static_cast<std::size_t>(k)) *
                            static_cast<std::size_t>(n);
            for (int i = 0; i < n; ++i) c[i] = b0 * x[static_cast<std::size_t>(i)];
        }
        double q = 0.0;
        for (double v : paths->at(m, grid.n_steps)) q += v * v;
        inst.terminal[static_cast<std::size_t>(m)] = q / static_cast<double>(n);
    }
    inst.noise = std::move(noise);
    inst.paths = std::move(paths);
    inst.validate();
    return inst;
}

/// The quadratic trial of experiments 1-2 at the published initial point
/// (y0, theta_y, theta_z) = (1.0, -1.0, -1.0).
inline TrialSolution make_quadratic_trial(int n, double y0 = 1.0, double theta_value = -1.0,
                                          double theta_gradient = -1.0) {
    TrialSolution trial;
    trial.y0 = y0;
    trial.value_model = std::make_unique<QuadraticValueModel>(theta_value, n);
    trial.gradient_model = std::make_unique<QuadraticGradientModel>(theta_gradient, n);
    return trial;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline std::string run_basename(const RunConfig& cfg, bool pi_run) {
    std::string base = cfg.experiment;
    if (pi_run) base += std::string("_") + subroutine_name(cfg.subroutine);
    base += std::string("_set_") + criterion_set_name(cfg.set);
    return base;
}

inline json opt_config_json(const OptConfig& o) {
    return json{{"lr_y0", o.lr_y0},       {"lr_value", o.lr_value}, {"lr_gradient", o.lr_gradient},
                {"momentum", o.momentum}, {"nesterov", o.nesterov}, {"clip_norm", o.clip_norm},
                {"lr_decay", o.lr_decay}, {"n_steps", o.n_steps},   {"batch_size", o.batch_size}};
}

inline json manifest_json(const RunConfig& cfg) {
    json m;
    m["tool"] = "fbsde";
    m["version"] = kVersion;
    m["experiment"] = cfg.experiment;
    m["set"] = std::string(1, criterion_set_name(cfg.set));
    m["subroutine"] = subroutine_name(cfg.subroutine);
    m["repeats"] = cfg.repeats;
    m["seed"] = cfg.seed;
    m["start_time"] = cfg.start_time;
    m["horizon"] = cfg.horizon;
    m["grid_steps"] = cfg.grid_steps;
    m["dim"] = cfg.dim;
    m["b0"] = cfg.b0;
    m["sigma0"] = cfg.sigma0;
    m["bhat0"] = cfg.bhat0;
    m["control_bound"] = cfg.control_bound;
    m["initial_gain"] = cfg.initial_gain;
    m["behavior_gain"] = cfg.behavior_gain;
    m["opt"] = opt_config_json(cfg.opt);
    m["iterations"] = cfg.iterations;
    m["mlp_hidden"] = cfg.mlp_hidden;
    m["cost_eval_batch"] = cfg.cost_eval_batch;
    m["epsilon_eval_batch"] = cfg.epsilon_eval_batch;
    m["warm_start"] = cfg.warm_start;
    m["resample_per_step"] = cfg.resample_per_step;
    m["vstar_samples"] = cfg.vstar_samples;
    return m;
}

inline void write_run_files(const RunConfig& cfg, const std::string& base, const std::string& csv,
                            const json& summary) {
    if (cfg.out_dir.empty()) return;
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    write_text_file((dir / (base + ".csv")).string(), csv);
    write_text_file((dir / (base + ".summary.json")).string(), summary.dump(2) + "\n");
    write_text_file((dir / (base + ".manifest.json")).string(), manifest_json(cfg).dump(2) + "\n");
}

}  // namespace detail

inline constexpr const char* kSolveBsdeCsvHeader = "repeat,step,loss,abs_err_theta_y,abs_err_theta_z,abs_err_y0";
inline constexpr const char* kRunPiCsvHeader = "repeat,iteration,cost,cost_stderr,epsilon";

struct SolveBsdeOutcome {
    std::string csv;
    json summary;
    // final absolute parameter errors, one entry per repeat
    std::vector<double> final_err_value;
    std::vector<double> final_err_gradient;
    std::vector<double> final_err_y0;
    // initial absolute errors (identical across repeats)
    double init_err_value = 0.0;
    double init_err_gradient = 0.0;
    double init_err_y0 = 0.0;
    std::vector<std::vector<double>> loss_histories;
};

/// Runs the backward-solver protocol of experiments 1-2: per repeat, SGD on
/// the chosen criterion from the published initial point, logging one CSV
/// row per gradient step (pre-update state; step 0 carries the initial
/// errors). Divergence propagates after the rows written so far are flushed.
inline SolveBsdeOutcome run_solve_bsde(const RunConfig& cfg) {
    if (cfg.experiment != "example1" && cfg.experiment != "example2")
        throw std::invalid_argument("solve-bsde runs experiment example1 or example2, got " + cfg.experiment);
    const int n = cfg.dim;
    const TimeGrid grid = cfg.grid();
    const OracleSolution oracle = cfg.experiment == "example1" ? example1_oracle(n) : example2_oracle(n, cfg.b0);
    const bool track_y0 = cfg.set == CriterionSet::A;

    std::ofstream mirror;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        const auto path = std::filesystem::path(cfg.out_dir) / (detail::run_basename(cfg, false) + ".csv");
        mirror.open(path, std::ios::binary);
        if (!mirror) throw std::runtime_error("cannot open for writing: " + path.string());
    }
    CsvBuilder csv(mirror.is_open() ? &mirror : nullptr);
    csv.header(kSolveBsdeCsvHeader);

    SolveBsdeOutcome out;
    const TrialSolution init = make_quadratic_trial(n);
    out.init_err_value = std::abs(-1.0 - oracle.theta_value);
    out.init_err_gradient = std::abs(-1.0 - oracle.theta_gradient);
    out.init_err_y0 = std::abs(1.0 - oracle.y0);

    for (int repeat = 0; repeat < cfg.repeats; ++repeat) {
        TrialSolution trial = init;
        OptConfig opt = cfg.opt;
        opt.seed = derive_seed(cfg.seed, {0x5Bu, static_cast<std::uint64_t>(repeat)});

        auto factory = [&cfg, n, grid](int, std::uint64_t seed) {
            return cfg.experiment == "example1" ? example1_instance(n, grid, cfg.opt.batch_size, seed)
                                                : example2_instance(n, cfg.b0, grid, cfg.opt.batch_size, seed);
        };
        auto log_row = [&](int step, double loss, const TrialSolution& state) {
            const auto p = state.get_params();
            csv.cell(repeat).cell(step).cell(loss);
            csv.cell(std::abs(p[1] - oracle.theta_value));
            csv.cell(std::abs(p[2] - oracle.theta_gradient));
            if (track_y0) csv.cell(std::abs(p[0] - oracle.y0));
            else csv.empty_cell();
            csv.end_row();
        };

        if (cfg.opt.n_steps == 0) {
            const BsdeInstance inst = factory(0, derive_seed(opt.seed, {0}));
            log_row(0, criterion_value(inst, trial, cfg.set, measure_for(cfg.set)), trial);
            out.loss_histories.emplace_back();
        } else {
            out.loss_histories.push_back(sgd_solve(factory, trial, cfg.set, opt, log_row).loss_history);
        }

        const auto p = trial.get_params();
        out.final_err_value.push_back(std::abs(p[1] - oracle.theta_value));
        out.final_err_gradient.push_back(std::abs(p[2] - oracle.theta_gradient));
        out.final_err_y0.push_back(std::abs(p[0] - oracle.y0));
    }

    out.csv = csv.str();
    json summary;
    summary["experiment"] = cfg.experiment;
    summary["set"] = std::string(1, criterion_set_name(cfg.set));
    summary["repeats"] = cfg.repeats;
    summary["steps"] = cfg.opt.n_steps;
    summary["oracle"] = {{"theta_value", oracle.theta_value},
                         {"theta_gradient", oracle.theta_gradient},
                         {"y0", oracle.y0}};
    summary["initial_abs_err"] = {{"theta_value", out.init_err_value},
                                  {"theta_gradient", out.init_err_gradient},
                                  {"y0", out.init_err_y0}};
    summary["final_abs_err"] = {
        {"theta_value", {{"mean", detail::mean_of(out.final_err_value)}, {"std", detail::std_of(out.final_err_value)}}},
        {"theta_gradient",
         {{"mean", detail::mean_of(out.final_err_gradient)}, {"std", detail::std_of(out.final_err_gradient)}}},
        {"y0", {{"mean", detail::mean_of(out.final_err_y0)}, {"std", detail::std_of(out.final_err_y0)}}}};
    summary["version"] = kVersion;
    out.summary = summary;

    if (mirror.is_open()) mirror.close();
    if (!cfg.out_dir.empty()) {
        const std::string base = detail::run_basename(cfg, false);
        namespace fs = std::filesystem;
        write_text_file((fs::path(cfg.out_dir) / (base + ".summary.json")).string(), summary.dump(2) + "\n");
        write_text_file((fs::path(cfg.out_dir) / (base + ".manifest.json")).string(),
                        detail::manifest_json(cfg).dump(2) + "\n");
    }
    return out;
}

struct PiOutcome {
    std::string csv;
    json summary;
    std::vector<PIResult> results;  // one per repeat
    VStarEstimate v_star;
};

/// Runs the policy-iteration protocol of experiments 3-4 (or a custom
/// log-terminal LQ setup): per repeat, a full generalized-policy-iteration
/// pass with per-iteration cost and criterion logging, referenced against
/// the Hopf-Cole optimal cost.
inline PiOutcome run_pi_experiment(const RunConfig& cfg) {
    if (cfg.experiment != "example3" && cfg.experiment != "example4" && cfg.experiment != "custom")
        throw std::invalid_argument("run-pi runs experiment example3, example4 or custom, got " + cfg.experiment);
    if (cfg.subroutine == Subroutine::OffPolicy && cfg.set == CriterionSet::C)
        throw std::invalid_argument(
            "run-pi: Set c has no off-policy form (the evaluation BSDE couples to z); use the on-policy subroutine");

    const int n = cfg.dim;
    const ControlProblem problem = lq_log_problem(cfg.sigma0, cfg.bhat0, cfg.control_bound, n);
    const std::vector<double> x0(static_cast<std::size_t>(n), 0.0);

    PiOutcome out;
    out.v_star = hopf_cole_v_star(cfg.start_time, x0, cfg.horizon, cfg.sigma0, cfg.bhat0, n, cfg.vstar_samples,
                                  derive_seed(cfg.seed, {0xF5u}));

    std::ofstream mirror;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        const auto path = std::filesystem::path(cfg.out_dir) / (detail::run_basename(cfg, true) + ".csv");
        mirror.open(path, std::ios::binary);
        if (!mirror) throw std::runtime_error("cannot open for writing: " + path.string());
    }
    CsvBuilder csv(mirror.is_open() ? &mirror : nullptr);
    csv.header(kRunPiCsvHeader);

    std::vector<double> final_errors, initial_errors;
    for (int repeat = 0; repeat < cfg.repeats; ++repeat) {
        PIConfig pi;
        pi.subroutine = cfg.subroutine;
        pi.set = cfg.set;
        pi.n_iterations = cfg.iterations;
        pi.initial_gain = cfg.initial_gain;
        pi.behavior_gain = cfg.behavior_gain;
        pi.start_time = cfg.start_time;
        pi.start_state = x0;
        pi.grid = cfg.grid();
        pi.opt = cfg.opt;
        pi.mlp_hidden = cfg.mlp_hidden;
        pi.cost_eval_batch = cfg.cost_eval_batch;
        pi.epsilon_eval_batch = cfg.epsilon_eval_batch;
        pi.warm_start = cfg.warm_start;
        pi.resample_per_step = cfg.resample_per_step;
        pi.seed = derive_seed(cfg.seed, {0x91u, static_cast<std::uint64_t>(repeat)});

        PIResult result = run_gpi(problem, pi);
        for (std::size_t i = 0; i < result.costs.size(); ++i) {
            csv.cell(repeat).cell(static_cast<int>(i)).cell(result.costs[i]).cell(result.cost_stderrs[i]);
            if (i == 0) csv.empty_cell();
            else csv.cell(result.epsilons[i - 1]);
            csv.end_row();
        }
        initial_errors.push_back(std::abs(result.costs.front() - out.v_star.value));
        if (!result.failed) final_errors.push_back(std::abs(result.costs.back() - out.v_star.value));
        out.results.push_back(std::move(result));
        if (out.results.back().failed) break;
    }

    out.csv = csv.str();
    json summary;
    summary["experiment"] = cfg.experiment;
    summary["set"] = std::string(1, criterion_set_name(cfg.set));
    summary["subroutine"] = subroutine_name(cfg.subroutine);
    summary["repeats"] = cfg.repeats;
    summary["v_star"] = {{"value", out.v_star.value}, {"stderr", out.v_star.stderr_}, {"samples", out.v_star.n_samples}};
    summary["initial_abs_cost_err"] = {{"mean", detail::mean_of(initial_errors)},
                                       {"std", detail::std_of(initial_errors)}};
    summary["final_abs_cost_err"] = {{"mean", detail::mean_of(final_errors)}, {"std", detail::std_of(final_errors)}};
    bool any_failed = false;
    double seconds = 0.0;
    for (const PIResult& r : out.results) {
        any_failed = any_failed || r.failed;
        for (double s : r.iteration_seconds) seconds += s;
    }
    summary["failed"] = any_failed;
    summary["total_iteration_seconds"] = seconds;
    summary["version"] = kVersion;
    out.summary = summary;

    if (mirror.is_open()) mirror.close();
    if (!cfg.out_dir.empty()) {
        const std::string base = detail::run_basename(cfg, true);
        namespace fs = std::filesystem;
        write_text_file((fs::path(cfg.out_dir) / (base + ".summary.json")).string(), summary.dump(2) + "\n");
        write_text_file((fs::path(cfg.out_dir) / (base + ".manifest.json")).string(),
                        detail::manifest_json(cfg).dump(2) + "\n");
    }
    if (!out.results.empty() && out.results.back().failed)
        throw std::runtime_error("run-pi: " + out.results.back().failure);
    return out;
}

/// Rebuilds a RunConfig from a run manifest; together with the manifest
/// writer this makes every run byte-reproducible from its output directory.
inline RunConfig run_config_from_manifest(const json& m) {
    RunConfig cfg;
    cfg.experiment = m.at("experiment").get<std::string>();
    cfg.set = criterion_set_from_name(m.at("set").get<std::string>());
    cfg.subroutine = m.at("subroutine").get<std::string>() == "on" ? Subroutine::OnPolicy : Subroutine::OffPolicy;
    cfg.repeats = m.at("repeats").get<int>();
    cfg.seed = m.at("seed").get<std::uint64_t>();
    cfg.start_time = m.at("start_time").get<double>();
    cfg.horizon = m.at("horizon").get<double>();
    cfg.grid_steps = m.at("grid_steps").get<int>();
    cfg.dim = m.at("dim").get<int>();
    cfg.b0 = m.at("b0").get<double>();
    cfg.sigma0 = m.at("sigma0").get<double>();
    cfg.bhat0 = m.at("bhat0").get<double>();
    cfg.control_bound = m.at("control_bound").get<double>();
    cfg.initial_gain = m.at("initial_gain").get<double>();
    cfg.behavior_gain = m.at("behavior_gain").get<double>();
    const json& o = m.at("opt");
    cfg.opt.lr_y0 = o.at("lr_y0").get<double>();
    cfg.opt.lr_value = o.at("lr_value").get<double>();
    cfg.opt.lr_gradient = o.at("lr_gradient").get<double>();
    cfg.opt.momentum = o.at("momentum").get<double>();
    cfg.opt.nesterov = o.at("nesterov").get<bool>();
    cfg.opt.clip_norm = o.at("clip_norm").get<double>();
    cfg.opt.lr_decay = o.at("lr_decay").get<double>();
    cfg.opt.n_steps = o.at("n_steps").get<int>();
    cfg.opt.batch_size = o.at("batch_size").get<int>();
    cfg.iterations = m.at("iterations").get<int>();
    cfg.mlp_hidden = m.at("mlp_hidden").get<int>();
    cfg.cost_eval_batch = m.at("cost_eval_batch").get<int>();
    cfg.epsilon_eval_batch = m.at("epsilon_eval_batch").get<int>();
    cfg.warm_start = m.at("warm_start").get<bool>();
    cfg.resample_per_step = m.at("resample_per_step").get<bool>();
    cfg.vstar_samples = m.at("vstar_samples").get<int>();
    return cfg;
}

/// Reference values as JSON, for the `oracle` command.
inline json oracle_example_report(int example, int n, double b0 = -0.1) {
    if (example != 1 && example != 2) throw std::invalid_argument("oracle: only experiments 1 and 2 have closed forms");
    const OracleSolution sol = example == 1 ? example1_oracle(n) : example2_oracle(n, b0);
    json j;
    j["example"] = example;
    j["dim"] = n;
    j["theta_value_star"] = sol.theta_value;
    j["theta_gradient_star"] = sol.theta_gradient;
    j["y0_star"] = sol.y0;
    return j;
}

inline json oracle_vstar_report(double t, double horizon, double sigma0, double bhat0, int n, int samples,
                                std::uint64_t seed) {
    const std::vector<double> x0(static_cast<std::size_t>(n), 0.0);
    const VStarEstimate est = hopf_cole_v_star(t, x0, horizon, sigma0, bhat0, n, samples, seed);
    json j;
    j["v_star"] = est.value;
    j["stderr"] = est.stderr_;
    j["samples"] = est.n_samples;
    j["dim"] = n;
    j["sigma0"] = sigma0;
    j["bhat0"] = bhat0;
    j["t"] = t;
    j["horizon"] = horizon;
    j["seed"] = seed;
    return j;
}

}  // namespace fbsde
