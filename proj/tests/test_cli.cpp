#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "qjet/config.hpp"
#include "qjet/runio.hpp"

using namespace qjet;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QJET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("qjet_cli_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config parsing: comments, defaults, validation") {
    auto cfg = parse_config_text("# experiment\nmodel = qgnn\nsynth_n = 100 # inline\n",
                                 "test");
    CHECK(cfg.model == "qgnn");
    CHECK(cfg.synth_n == 100);
    resolve_and_validate(cfg);
    CHECK(cfg.hidden == 8);  // forced to 2^3
    CHECK(cfg.layers == 6);  // Table-1 default
    CHECK(cfg.batch == 1);   // quantum default

    auto classical = parse_config_text("model = gnn\nsynth_n = 10\n", "test");
    resolve_and_validate(classical);
    CHECK(classical.hidden == 10);
    CHECK(classical.layers == 5);
    CHECK(classical.batch == 64);

    CHECK_THROWS_AS(parse_config_text("bogus_key = 1\n", "test"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("model gnn\n", "test"), ValidationError);

    auto bad_hidden = parse_config_text("model = eqgnn\nhidden = 10\nsynth_n = 10\n", "test");
    CHECK_THROWS_AS(resolve_and_validate(bad_hidden), ValidationError);

    auto no_data = parse_config_text("model = gnn\n", "test");
    CHECK_THROWS_AS(resolve_and_validate(no_data), ValidationError);

    // canonical rendering re-parses to the same hash
    auto echo = parse_config_text(canonical_config(cfg), "echo");
    CHECK(config_hash(echo) == config_hash(cfg));
}

TEST_CASE("fmt17 round-trips doubles exactly") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 17 - 8);
        CHECK(std::stod(fmt17(v)) == v);
    }
    CHECK(std::stod(fmt17(0.1)) == 0.1);
    CHECK(std::stod(fmt17(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("cli: synth is byte-identical per seed; ingest validates input") {
    TempDir dir;
    const auto a = dir.path / "a.jsonl";
    const auto b = dir.path / "b.jsonl";
    REQUIRE(run_cli("synth --n 50 --seed 123 --output " + a.string()) == 0);
    REQUIRE(run_cli("synth --n 50 --seed 123 --output " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    REQUIRE(run_cli("synth --n 50 --seed 124 --output " + b.string()) == 0);
    CHECK(slurp(a) != slurp(b));

    const auto cache = dir.path / "jets.qjet";
    CHECK(run_cli("ingest --input " + a.string() + " --output " + cache.string()) == 0);
    CHECK(fs::exists(cache));

    // a jet with 9 particles is excluded but ingest still succeeds
    {
        std::ofstream out(a, std::ios::app);
        out << R"({"label":1,"particles":[)";
        for (int i = 0; i < 9; ++i)
            out << (i ? "," : "")
                << R"({"pt":5.0,"y":0.1,"phi":0.2,"pdgid":211})";
        out << "]}\n";
    }
    CHECK(run_cli("ingest --input " + a.string() + " --output " + cache.string()) == 0);

    // corrupt JSON on line 2: exit code 2
    const auto corrupt = dir.path / "corrupt.jsonl";
    {
        std::ofstream out(corrupt);
        out << R"({"label":0,"particles":[{"pt":1.0,"y":0.0,"phi":0.0,"pdgid":22}]})" << "\n";
        out << "{broken\n";
    }
    CHECK(run_cli("ingest --input " + corrupt.string() + " --output " + cache.string()) == 2);

    // missing input file: exit code 2 comes from validation, 1 from IO; the
    // CLI treats an unreadable path as an IO failure
    CHECK(run_cli("ingest --input /nonexistent.jsonl --output " + cache.string()) == 1);

    // bad flags: exit code 2
    CHECK(run_cli("ingest --no-such-flag") == 2);
    CHECK(run_cli("definitely-not-a-subcommand") == 2);
}

TEST_CASE("cli: train writes the full artifact set; eval reproduces the AUC") {
    TempDir dir;
    const auto cfg_path = dir.path / "exp.cfg";
    {
        std::ofstream out(cfg_path);
        out << "model = gnn\nhidden = 4\nlayers = 2\nepochs = 3\nbatch = 8\nseed = 5\n"
            << "synth_n = 80\nsynth_seed = 3\n"
            << "train_size = 50\nval_size = 15\ntest_size = 15\n"
            << "checkpoint_start = 2\n"
            << "output_dir = " << (dir.path / "runs").string() << "\n"
            << "run_name = t1\n";
    }
    REQUIRE(run_cli("train --config " + cfg_path.string()) == 0);

    const fs::path run = dir.path / "runs" / "t1";
    for (const char* f : {"config.resolved", "report.json", "history.csv", "roc.csv",
                          "model.qjck"})
        CHECK(fs::exists(run / f));

    // history has epochs + 1 data rows and round-trips exactly
    auto rows = read_csv((run / "history.csv").string());
    REQUIRE(rows.size() == 1 + 3 + 1); // header + baseline + 3 epochs
    CHECK(rows[0][0] == "epoch");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        REQUIRE(rows[r].size() == 6);
        for (std::size_t c = 1; c < 6; ++c) {
            const double v = std::stod(rows[r][c]);
            CHECK(fmt17(v) == rows[r][c]);
        }
    }

    auto roc = read_csv((run / "roc.csv").string());
    CHECK(roc[0][0] == "fpr");
    CHECK(std::stod(roc[1][0]) == 0.0);
    CHECK(std::stod(roc.back()[0]) == 1.0);

    // eval picks config.resolved up from the run directory
    CHECK(run_cli("eval --checkpoint " + (run / "model.qjck").string()) == 0);

    // a wrong config is rejected with exit 2
    const auto other_cfg = dir.path / "other.cfg";
    {
        std::ofstream out(other_cfg);
        out << "model = gnn\nhidden = 6\nlayers = 2\nsynth_n = 80\n"
            << "train_size = 50\nval_size = 15\ntest_size = 15\n";
    }
    CHECK(run_cli("eval --checkpoint " + (run / "model.qjck").string() + " --config " +
                  other_cfg.string()) == 2);

    // config violation is caught before training
    const auto bad_cfg = dir.path / "bad.cfg";
    {
        std::ofstream out(bad_cfg);
        out << "model = qgnn\nhidden = 10\nsynth_n = 50\n";
    }
    CHECK(run_cli("train --config " + bad_cfg.string()) == 2);
}

TEST_CASE("cli: sweep over an empty directory emits a header-only csv") {
    TempDir dir;
    const auto out_csv = dir.path / "auc_vs_params.csv";
    REQUIRE(run_cli("sweep --configs " + dir.path.string() + " --output " +
                    out_csv.string()) == 0);
    auto rows = read_csv(out_csv.string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == "config");
    CHECK(rows[0][2] == "param_count");
}

TEST_CASE("cli: sweep runs configs and records failures without stopping") {
    TempDir dir;
    const auto cfgs = dir.path / "cfgs";
    fs::create_directories(cfgs);
    {
        std::ofstream out(cfgs / "a_good.cfg");
        out << "model = gnn\nhidden = 3\nlayers = 1\nepochs = 1\nbatch = 8\nsynth_n = 40\n"
            << "train_size = 24\nval_size = 8\ntest_size = 8\ncheckpoint_start = 1\n"
            << "output_dir = " << (dir.path / "runs").string() << "\nrun_name = sweep_a\n";
    }
    {
        std::ofstream out(cfgs / "b_bad.cfg");
        out << "model = qgnn\nhidden = 5\nsynth_n = 40\n"; // invalid hidden
    }
    const auto out_csv = dir.path / "sweep.csv";
    REQUIRE(run_cli("sweep --configs " + cfgs.string() + " --output " + out_csv.string()) ==
            0);
    auto rows = read_csv(out_csv.string());
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "a_good.cfg");
    CHECK(rows[1][4] == "ok");
    CHECK(std::stoul(rows[1][2]) > 0);
    CHECK(rows[2][0] == "b_bad.cfg");
    CHECK(rows[2][4].substr(0, 7) == "failed:");
}
