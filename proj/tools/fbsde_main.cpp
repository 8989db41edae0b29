// Command-line front end: run the backward-solver experiments, the
// policy-iteration experiments, or print reference values.
//
//   fbsde solve-bsde --example 1 --set b --seed 7 --out runs
//   fbsde run-pi --example 3 --subroutine off --set a --out runs
//   fbsde oracle --example 1
//   fbsde oracle v-star --sigma0 1.4142135 --bhat0 1 --samples 12800 --seed 1

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fbsde/experiments.hpp"
#include "fbsde/version.hpp"

namespace {

struct CliOptions {
    int example = 1;
    std::string set = "a";
    std::string subroutine = "off";
    int repeats = -1;
    int steps = -1;
    int iterations = -1;
    int batch = -1;
    int dim = -1;
    double lr_y0 = -1.0, lr_value = -1.0, lr_gradient = -1.0;
    double clip = -1.0, decay = -1.0, momentum = -1.0;
    double sigma0 = -1.0, bhat0 = -1.0, amax = -1.0;
    int cost_eval = -1, eps_eval = -1, vstar_samples = -1;
    int hidden = -1;
    bool cold_start = false;
    bool resample = false;
    std::uint64_t seed = 1;
    std::string out_dir;
};

fbsde::RunConfig build_config(const CliOptions& o, bool pi_run) {
    fbsde::RunConfig cfg = fbsde::RunConfig::for_experiment("example" + std::to_string(o.example));
    cfg.set = fbsde::criterion_set_from_name(o.set);
    cfg.subroutine = o.subroutine == "on" ? fbsde::Subroutine::OnPolicy : fbsde::Subroutine::OffPolicy;
    cfg.seed = o.seed;
    cfg.out_dir = o.out_dir;
    if (o.repeats >= 0) cfg.repeats = o.repeats;
    if (o.steps >= 0) cfg.opt.n_steps = o.steps;
    if (o.iterations >= 0) cfg.iterations = o.iterations;
    if (o.batch >= 0) cfg.opt.batch_size = o.batch;
    if (o.dim >= 0) cfg.dim = o.dim;
    if (o.lr_y0 >= 0) cfg.opt.lr_y0 = o.lr_y0;
    if (o.lr_value >= 0) cfg.opt.lr_value = o.lr_value;
    if (o.lr_gradient >= 0) cfg.opt.lr_gradient = o.lr_gradient;
    if (o.clip >= 0) cfg.opt.clip_norm = o.clip;
    if (o.decay >= 0) cfg.opt.lr_decay = o.decay;
    if (o.momentum >= 0) {
        cfg.opt.momentum = o.momentum;
        cfg.opt.nesterov = o.momentum > 0.0;
    }
    if (o.sigma0 >= 0) cfg.sigma0 = o.sigma0;
    if (o.bhat0 >= 0) cfg.bhat0 = o.bhat0;
    if (o.amax >= 0) cfg.control_bound = o.amax;
    if (o.cost_eval >= 0) cfg.cost_eval_batch = o.cost_eval;
    if (o.eps_eval >= 0) cfg.epsilon_eval_batch = o.eps_eval;
    if (o.vstar_samples >= 0) cfg.vstar_samples = o.vstar_samples;
    if (o.hidden >= 0) cfg.mlp_hidden = o.hidden;
    cfg.warm_start = !o.cold_start;
    cfg.resample_per_step = o.resample;
    (void)pi_run;
    return cfg;
}

void add_common_flags(CLI::App* cmd, CliOptions& o) {
    cmd->set_config("--config", "", "plain key=value configuration file; command-line flags win");
    cmd->add_option("--set", o.set, "criterion set: a, b, c or d")
        ->check(CLI::IsMember({"a", "b", "c", "d", "A", "B", "C", "D"}));
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--repeats", o.repeats, "independent repetitions");
    cmd->add_option("--steps", o.steps, "gradient steps per optimization");
    cmd->add_option("--batch", o.batch, "Monte-Carlo sample size per gradient step");
    cmd->add_option("--dim", o.dim, "state/noise dimension");
    cmd->add_option("--lr-y0", o.lr_y0, "learning rate for the start value");
    cmd->add_option("--lr-value", o.lr_value, "learning rate for the value model");
    cmd->add_option("--lr-gradient", o.lr_gradient, "learning rate for the gradient model");
    cmd->add_option("--out", o.out_dir, "output directory (CSV + JSON)")->envname("FBSDE_OUTPUT_DIR");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte-Carlo backward-SDE solvers and policy iteration for stochastic control"};
    app.set_version_flag("--version", fbsde::kVersion);
    app.require_subcommand(1);

    CliOptions solve_opts;
    CLI::App* solve = app.add_subcommand("solve-bsde", "run the backward-solver experiments (1-2)");
    solve->add_option("--example", solve_opts.example, "experiment id (1 or 2)")->check(CLI::Range(1, 2));
    add_common_flags(solve, solve_opts);

    CliOptions pi_opts;
    CLI::App* pi = app.add_subcommand("run-pi", "run the policy-iteration experiments (3-4)");
    pi->add_option("--example", pi_opts.example, "experiment id (3 or 4)")->check(CLI::Range(3, 4));
    pi->add_option("--subroutine", pi_opts.subroutine, "evaluation data source: on or off policy")
        ->check(CLI::IsMember({"on", "off"}));
    pi->add_option("--iterations", pi_opts.iterations, "policy-iteration rounds");
    pi->add_option("--clip", pi_opts.clip, "gradient-norm clip threshold (0 disables)");
    pi->add_option("--decay", pi_opts.decay, "per-step learning-rate decay factor");
    pi->add_option("--momentum", pi_opts.momentum, "momentum coefficient (Nesterov when positive)");
    pi->add_option("--sigma0", pi_opts.sigma0, "diffusion scale");
    pi->add_option("--bhat0", pi_opts.bhat0, "control coupling coefficient");
    pi->add_option("--amax", pi_opts.amax, "control box half-width");
    pi->add_option("--hidden", pi_opts.hidden, "hidden width of the trial networks");
    pi->add_option("--cost-eval", pi_opts.cost_eval, "cost-evaluation batch size");
    pi->add_option("--eps-eval", pi_opts.eps_eval, "criterion-evaluation batch size");
    pi->add_option("--vstar-samples", pi_opts.vstar_samples, "samples for the optimal-cost reference");
    pi->add_flag("--cold-start", pi_opts.cold_start, "re-initialize the trial networks every iteration");
    pi->add_flag("--resample-per-step", pi_opts.resample,
                 "draw a fresh evaluation batch for every gradient step instead of fitting the per-call sample");
    add_common_flags(pi, pi_opts);

    // oracle: closed-form references
    int oracle_example = 1;
    int oracle_dim = 100;
    CLI::App* oracle = app.add_subcommand("oracle", "print reference values as JSON");
    oracle->add_option("--example", oracle_example, "experiment id (1 or 2)")->check(CLI::Range(1, 2));
    oracle->add_option("--dim", oracle_dim, "state/noise dimension");

    double vs_sigma0 = std::numbers::sqrt2, vs_bhat0 = 1.0, vs_t = 0.0, vs_horizon = 1.0;
    int vs_samples = 12800, vs_dim = 100;
    std::uint64_t vs_seed = 1;
    CLI::App* vstar = oracle->add_subcommand("v-star", "Monte-Carlo optimal cost of the log-terminal LQ problem");
    vstar->add_option("--sigma0", vs_sigma0, "diffusion scale");
    vstar->add_option("--bhat0", vs_bhat0, "control coupling coefficient (must be nonzero)");
    vstar->add_option("--samples", vs_samples, "Monte-Carlo sample count");
    vstar->add_option("--seed", vs_seed, "sampling seed");
    vstar->add_option("--dim", vs_dim, "state dimension");
    vstar->add_option("--t", vs_t, "start time");
    vstar->add_option("--horizon", vs_horizon, "terminal time");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            const fbsde::SolveBsdeOutcome out = fbsde::run_solve_bsde(build_config(solve_opts, false));
            std::cout << out.summary.dump(2) << '\n';
            return 0;
        }
        if (pi->parsed()) {
            const fbsde::PiOutcome out = fbsde::run_pi_experiment(build_config(pi_opts, true));
            std::cout << out.summary.dump(2) << '\n';
            return 0;
        }
        if (oracle->parsed()) {
            if (vstar->parsed()) {
                std::cout << fbsde::oracle_vstar_report(vs_t, vs_horizon, vs_sigma0, vs_bhat0, vs_dim, vs_samples,
                                                        vs_seed)
                                 .dump(2)
                          << '\n';
            } else {
                std::cout << fbsde::oracle_example_report(oracle_example, oracle_dim).dump(2) << '\n';
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
