#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fbsde/experiments.hpp"

using namespace fbsde;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("fbsde_test_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_bsde_config(const std::string& experiment, CriterionSet set) {
    RunConfig cfg = RunConfig::for_experiment(experiment);
    cfg.set = set;
    cfg.dim = 5;
    cfg.grid_steps = 20;
    cfg.repeats = 2;
    cfg.opt.n_steps = 8;
    cfg.opt.batch_size = 8;
    cfg.seed = 11;
    return cfg;
}

RunConfig tiny_pi_config(CriterionSet set, Subroutine sub) {
    RunConfig cfg = RunConfig::for_experiment("example3");
    cfg.set = set;
    cfg.subroutine = sub;
    cfg.dim = 2;
    cfg.grid_steps = 20;
    cfg.repeats = 2;
    cfg.iterations = 2;
    cfg.opt.n_steps = 6;
    cfg.opt.batch_size = 8;
    cfg.mlp_hidden = 4;
    cfg.cost_eval_batch = 64;
    cfg.epsilon_eval_batch = 16;
    cfg.vstar_samples = 2000;
    cfg.seed = 12;
    return cfg;
}

}  // namespace

TEST_CASE("experiment defaults follow the published protocols") {
    const RunConfig e1 = RunConfig::for_experiment("example1");
    CHECK(e1.opt.n_steps == 200);
    CHECK(e1.opt.batch_size == 16);
    CHECK(e1.opt.lr_y0 == doctest::Approx(0.1));
    CHECK(e1.opt.lr_value == doctest::Approx(1e-5));
    CHECK(e1.opt.lr_gradient == doctest::Approx(1e-3));
    CHECK(e1.opt.momentum == 0.0);
    CHECK(e1.opt.clip_norm == 0.0);
    CHECK(e1.opt.lr_decay == 1.0);
    CHECK(e1.repeats == 10);
    CHECK(e1.dim == 100);
    CHECK(e1.grid().dt == doctest::Approx(0.01));

    const RunConfig e2 = RunConfig::for_experiment("example2");
    CHECK(e2.b0 == doctest::Approx(-0.1));

    const RunConfig e3 = RunConfig::for_experiment("example3");
    CHECK(e3.opt.lr_y0 == doctest::Approx(0.5));
    CHECK(e3.opt.lr_value == doctest::Approx(0.1));
    CHECK(e3.opt.lr_gradient == doctest::Approx(0.1));
    CHECK(e3.opt.momentum == doctest::Approx(1e-3));
    CHECK(e3.opt.nesterov);
    CHECK(e3.opt.clip_norm == doctest::Approx(10.0));
    CHECK(e3.opt.lr_decay == doctest::Approx(0.99));
    CHECK(e3.opt.n_steps == 75);
    CHECK(e3.opt.batch_size == 16);
    CHECK(e3.iterations == 9);
    CHECK(e3.repeats == 5);
    CHECK(e3.mlp_hidden == 16);
    CHECK(e3.control_bound == doctest::Approx(100.0));
    CHECK(e3.sigma0 == doctest::Approx(std::numbers::sqrt2));
    CHECK(e3.bhat0 == doctest::Approx(1.0));
    CHECK(e3.cost_eval_batch == 4096);
    CHECK(e3.vstar_samples == 12800);

    CHECK(RunConfig::for_experiment("example4").sigma0 == doctest::Approx(20.0));
    CHECK_THROWS_AS(RunConfig::for_experiment("example9"), std::invalid_argument);
}

TEST_CASE("solve-bsde CSV schema and initial-state row") {
    RunConfig cfg = tiny_bsde_config("example1", CriterionSet::A);
    cfg.dim = 100;
    cfg.repeats = 1;
    cfg.opt.n_steps = 0;
    const SolveBsdeOutcome out = run_solve_bsde(cfg);

    const auto rows = lines_of(out.csv);
    REQUIRE(rows.size() == 2);  // header + the single pre-update row
    // golden header: the column set is part of the external interface
    CHECK(rows[0] == "repeat,step,loss,abs_err_theta_y,abs_err_theta_z,abs_err_y0");
    CHECK(rows[0] == std::string(kSolveBsdeCsvHeader));
    const auto f = fields_of(rows[1]);
    REQUIRE(f.size() == 6);
    CHECK(f[0] == "0");
    CHECK(f[1] == "0");
    CHECK(std::stod(f[3]) == doctest::Approx(1.01));  // |theta_y - 1/n|
    CHECK(std::stod(f[4]) == doctest::Approx(1.01));  // |theta_z - 1/n|
    CHECK(std::stod(f[5]) == doctest::Approx(1.0));   // |y0 - 0|
}

TEST_CASE("solve-bsde row counts, set-dependent y0 column, and determinism") {
    RunConfig cfg = tiny_bsde_config("example1", CriterionSet::B);
    const SolveBsdeOutcome out = run_solve_bsde(cfg);
    const auto rows = lines_of(out.csv);
    REQUIRE(static_cast<int>(rows.size()) == 1 + cfg.repeats * cfg.opt.n_steps);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields_of(rows[i]);
        REQUIRE(f.size() == 6);
        CHECK(f[5].empty());  // y0 error only applies to set a
    }
    CHECK(out.final_err_gradient.size() == 2);
    CHECK(out.summary.at("final_abs_err").at("theta_gradient").contains("mean"));

    const SolveBsdeOutcome again = run_solve_bsde(cfg);
    CHECK(again.csv == out.csv);

    RunConfig e2 = tiny_bsde_config("example2", CriterionSet::D);
    const SolveBsdeOutcome out2 = run_solve_bsde(e2);
    CHECK(lines_of(out2.csv).size() == 1 + 2 * 8);

    CHECK_THROWS_AS(run_solve_bsde(tiny_pi_config(CriterionSet::A, Subroutine::OffPolicy)), std::invalid_argument);
}

TEST_CASE("solve-bsde writes csv, summary and manifest files") {
    TempDir dir("solve");
    RunConfig cfg = tiny_bsde_config("example1", CriterionSet::A);
    cfg.out_dir = dir.path.string();
    const SolveBsdeOutcome out = run_solve_bsde(cfg);

    const std::string csv_file = slurp(dir.path / "example1_set_a.csv");
    CHECK(csv_file == out.csv);
    const json summary = json::parse(slurp(dir.path / "example1_set_a.summary.json"));
    CHECK(summary.at("oracle").at("theta_value") == doctest::Approx(1.0 / cfg.dim));
    const json manifest = json::parse(slurp(dir.path / "example1_set_a.manifest.json"));
    CHECK(manifest.at("version") == std::string(kVersion));
    CHECK(manifest.at("seed") == cfg.seed);

    // the manifest reproduces the run byte-for-byte
    RunConfig replay = run_config_from_manifest(manifest);
    replay.out_dir.clear();
    CHECK(run_solve_bsde(replay).csv == out.csv);
}

TEST_CASE("solve-bsde keeps partial rows on divergence") {
    TempDir dir("diverge");
    RunConfig cfg = tiny_bsde_config("example1", CriterionSet::B);
    cfg.out_dir = dir.path.string();
    cfg.opt.lr_gradient = 1e9;
    cfg.opt.n_steps = 40;
    CHECK_THROWS_AS(run_solve_bsde(cfg), std::runtime_error);
    const auto rows = lines_of(slurp(dir.path / "example1_set_b.csv"));
    CHECK(rows.size() > 1);                      // some rows made it out
    CHECK(rows.size() < 1 + 40 * 2);             // but not the whole run
    CHECK(rows[0] == std::string(kSolveBsdeCsvHeader));
}

TEST_CASE("run-pi CSV schema, epsilon column, files and determinism") {
    TempDir dir("pi");
    RunConfig cfg = tiny_pi_config(CriterionSet::A, Subroutine::OffPolicy);
    cfg.out_dir = dir.path.string();
    const PiOutcome out = run_pi_experiment(cfg);

    const auto rows = lines_of(out.csv);
    REQUIRE(static_cast<int>(rows.size()) == 1 + cfg.repeats * (cfg.iterations + 1));
    CHECK(rows[0] == "repeat,iteration,cost,cost_stderr,epsilon");  // golden header
    CHECK(rows[0] == std::string(kRunPiCsvHeader));
    const auto first = fields_of(rows[1]);
    REQUIRE(first.size() == 5);
    CHECK(first[1] == "0");
    CHECK(first[4].empty());  // no criterion value for the initial policy
    const auto second = fields_of(rows[2]);
    CHECK_FALSE(second[4].empty());

    CHECK(out.summary.at("v_star").contains("value"));
    CHECK(out.results.size() == 2);
    CHECK(out.results[0].costs.size() == 3);

    const std::string csv_file = slurp(dir.path / "example3_off_set_a.csv");
    CHECK(csv_file == out.csv);
    const json manifest = json::parse(slurp(dir.path / "example3_off_set_a.manifest.json"));
    RunConfig replay = run_config_from_manifest(manifest);
    replay.out_dir.clear();
    CHECK(run_pi_experiment(replay).csv == out.csv);

    CHECK_THROWS_AS(run_pi_experiment(tiny_pi_config(CriterionSet::C, Subroutine::OffPolicy)),
                    std::invalid_argument);
    const PiOutcome on_c = run_pi_experiment(tiny_pi_config(CriterionSet::C, Subroutine::OnPolicy));
    CHECK(on_c.results.size() == 2);
    CHECK_THROWS_AS(run_pi_experiment(tiny_bsde_config("example1", CriterionSet::A)), std::invalid_argument);
}

TEST_CASE("oracle reports") {
    const json e1 = oracle_example_report(1, 100);
    CHECK(e1.at("theta_value_star") == doctest::Approx(0.01));
    CHECK(e1.at("y0_star") == doctest::Approx(0.0));
    const json e2 = oracle_example_report(2, 50);
    CHECK(e2.at("theta_gradient_star") == doctest::Approx(0.02));
    CHECK_THROWS_AS(oracle_example_report(3, 100), std::invalid_argument);

    const json v1 = oracle_vstar_report(0.0, 1.0, std::numbers::sqrt2, 1.0, 20, 4000, 5);
    const json v2 = oracle_vstar_report(0.0, 1.0, std::numbers::sqrt2, 1.0, 20, 4000, 5);
    CHECK(v1.at("v_star") == v2.at("v_star"));
    CHECK(v1.at("stderr").get<double>() > 0.0);
    CHECK_THROWS_WITH_AS(oracle_vstar_report(0.0, 1.0, std::numbers::sqrt2, 0.0, 20, 4000, 5),
                         doctest::Contains("direct expectation"), std::invalid_argument);
}

#ifdef FBSDE_CLI_PATH
TEST_CASE("command-line interface") {
    const std::string cli = FBSDE_CLI_PATH;

    SUBCASE("invalid criterion set is a usage error") {
        const int rc = std::system((cli + " solve-bsde --example 1 --set q >/dev/null 2>&1").c_str());
        CHECK(rc != 0);
    }
    SUBCASE("off-policy set c is rejected") {
        const int rc = std::system(
            (cli + " run-pi --example 3 --subroutine off --set c --repeats 1 --iterations 1 >/dev/null 2>&1").c_str());
        CHECK(rc != 0);
    }
    SUBCASE("oracle command prints reference values") {
        const int rc = std::system((cli + " oracle --example 1 >/dev/null 2>&1").c_str());
        CHECK(rc == 0);
    }
    SUBCASE("mini solve-bsde run writes its files") {
        TempDir dir("cli");
        const std::string cmd = cli + " solve-bsde --example 1 --set b --dim 4 --repeats 1 --steps 3 --batch 4 " +
                                "--seed 3 --out " + dir.path.string() + " >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        CHECK(rc == 0);
        CHECK(fs::exists(dir.path / "example1_set_b.csv"));
        CHECK(fs::exists(dir.path / "example1_set_b.summary.json"));
        CHECK(fs::exists(dir.path / "example1_set_b.manifest.json"));
    }
    SUBCASE("key=value config file with flags taking precedence") {
        TempDir dir("cfg");
        const fs::path cfg_file = dir.path / "run.cfg";
        {
            std::ofstream os(cfg_file);
            os << "example=1\nset=b\ndim=4\nrepeats=2\nsteps=3\nbatch=4\nseed=9\n";
            os << "out=" << dir.path.string() << "\n";
        }
        const std::string cmd = cli + " solve-bsde --config " + cfg_file.string() + " --repeats 1 >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        CHECK(rc == 0);
        const auto rows = lines_of(slurp(dir.path / "example1_set_b.csv"));
        CHECK(rows.size() == 1 + 1 * 3);  // --repeats 1 overrode repeats=2 from the file
    }
}
#endif
