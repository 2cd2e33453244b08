// End-to-end checks of the command-line surface: exit codes, golden-file
// determinism, config/flag precedence. Spawns the built binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "parqkd/games.hpp"

using nlohmann::json;

namespace {

const std::string kCli = PARQKD_CLI_PATH;

struct CmdResult {
    int exit_code;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    std::string out_file = "cli_test_stdout.tmp";
    std::string cmd = kCli + " " + args + " > " + out_file + " 2> cli_test_stderr.tmp";
    int status = std::system(cmd.c_str());
    std::ifstream f(out_file);
    std::stringstream ss;
    ss << f.rdbuf();
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, ss.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("keyrate: defaults give a complete report") {
    CmdResult r = run_cli("keyrate");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.output);
    for (const char* key : {"t", "eps", "mu", "mu_prime", "eps_prime", "h_tradeoff",
                            "eat_bound", "hmax_removed", "test_leak", "leak_ir", "key_length",
                            "rate", "security_eps", "vn_proxy_rate", "prefactor"})
        CHECK(rep.contains(key));
    CHECK(rep["constants"]["c_eps"] == 1.0);
}

TEST_CASE("keyrate: zero constants produce the prefactor-only report") {
    CmdResult r = run_cli(
        "keyrate --n 1e6 --delta 0.1 --alpha 1e-3 --nu 1e-3 --gamma 1e-3 --delta1 1e-3 "
        "--g-target 0.84 --c-eps 0 --c-mu-term 0 --c-additive 0");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.output);
    CHECK(rep["mu"] == 0.0);
    CHECK(rep["mu_loss"] == 0.0);
    CHECK(std::abs(rep["prefactor"].get<double>() - 0.6531133845248595) < 1e-9);
    CHECK(rep["key_length"].get<double>() > 0.0);
}

TEST_CASE("keyrate: bad threshold exits 2, unreachable mu chain exits 3") {
    CHECK(run_cli("keyrate --omega-th 2.0").exit_code == 2);
    CHECK(run_cli("keyrate --n 1e6 --delta 0.1 --alpha 1e-3 --nu 1e-3 --gamma 1e-3 "
                  "--g-target 0.84")
              .exit_code == 3);
}

TEST_CASE("simulate: fixed seed reproduces files byte for byte") {
    std::string args =
        "simulate --n 1000 --trials 8 --seed 31337 --q-noise 0.02 --out sim_run_a.json";
    REQUIRE(run_cli(args).exit_code == 0);
    REQUIRE(run_cli("simulate --n 1000 --trials 8 --seed 31337 --q-noise 0.02 "
                    "--out sim_run_b.json")
                .exit_code == 0);
    std::string a = slurp("sim_run_a.json"), b = slurp("sim_run_b.json");
    CHECK_FALSE(a.empty());
    CHECK(a == b);
    std::remove("sim_run_a.json");
    std::remove("sim_run_b.json");
}

TEST_CASE("simulate: summary statistics are sane at gamma = 1") {
    CmdResult r = run_cli("simulate --n 2100 --trials 30 --gamma 1.0 --seed 5");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.output);
    CHECK(rep["trials"] == 30);
    double win = rep["mean_win_fraction_on_s"].get<double>();
    // honest Q = 0 strategy at alpha = nu = 0.05 wins with prob ~0.9953
    CHECK(win > 0.99);
    CHECK(win <= 1.0);
    CHECK(rep["transcripts"].size() == 30);
    // question marginals carry expected values next to frequencies
    bool found_bot = false;
    for (const auto& m : rep["question_marginals"]) {
        if (m["x"] == "bot" && m["y"] == "bot") {
            found_bot = true;
            CHECK(std::abs(m["expected"].get<double>() - 0.0025) < 1e-12);
        }
    }
    CHECK(found_bot);
}

TEST_CASE("simulate: n too small for one test round exits 2") {
    CHECK(run_cli("simulate --n 10 --delta 0.1 --trials 2").exit_code == 2);
}

TEST_CASE("verify: identities pass, broken fixture fails, size limit enforced") {
    CmdResult ok = run_cli("verify --cases 2 --rounds 2 --seed 77");
    CHECK(ok.exit_code == 0);
    json rep = json::parse(ok.output);
    CHECK(rep["pass"] == true);
    CHECK(rep["max_norm_identity_deviation"].get<double>() < 1e-9);

    CmdResult broken = run_cli("verify --cases 1 --rounds 2 --seed 77 --fixture broken-povm");
    CHECK(broken.exit_code == 1);
    json brep = json::parse(broken.output);
    CHECK(brep["pass"] == false);

    CHECK(run_cli("verify --rounds 4").exit_code == 2);
}

TEST_CASE("entropy-table: endpoints, monotone bound column, grid validation") {
    CmdResult r = run_cli("entropy-table --alpha 0.05 --nu 0.05 --rows 50");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.output);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "omega,g,F,bound,tangent");
    std::vector<double> bounds;
    std::string line;
    while (std::getline(lines, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double omega, g, f, bound, tangent;
        ls >> omega >> g >> f >> bound >> tangent;
        bounds.push_back(bound);
        CHECK(tangent <= bound + 1e-9);
    }
    REQUIRE(bounds.size() == 50);
    CHECK(bounds.front() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(bounds.back() == doctest::Approx(0.95).epsilon(1e-9));
    for (std::size_t k = 1; k < bounds.size(); ++k) CHECK(bounds[k] >= bounds[k - 1] - 1e-12);

    CHECK(run_cli("entropy-table --rows 1").exit_code == 2);
}

TEST_CASE("config file: precedence and unknown-key rejection") {
    {
        std::ofstream f("cli_test_cfg.json");
        f << "{\"alpha\": 0.07, \"nu\": 0.06, \"rows\": 10}";
    }
    CmdResult file_only = run_cli("entropy-table --config cli_test_cfg.json");
    REQUIRE(file_only.exit_code == 0);
    CHECK(std::count(file_only.output.begin(), file_only.output.end(), '\n') == 11);

    // a flag overrides the file value: bound tops out at 1 - alpha
    CmdResult flag_wins = run_cli("entropy-table --config cli_test_cfg.json --alpha 0.02");
    REQUIRE(flag_wins.exit_code == 0);
    CHECK(flag_wins.output.find("0.98") != std::string::npos);

    {
        std::ofstream f("cli_test_cfg.json");
        f << "{\"alphaa\": 0.07}";
    }
    CHECK(run_cli("entropy-table --config cli_test_cfg.json").exit_code == 2);
    std::remove("cli_test_cfg.json");
}

TEST_CASE("verify: accepts a game from its text record") {
    {
        std::ofstream f("cli_test_game.txt");
        f << parqkd::game_to_text(parqkd::anchor(parqkd::chsh3_spec(0.06), 0.04));
    }
    CmdResult r = run_cli("verify --cases 1 --rounds 2 --seed 3 --game cli_test_game.txt");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"pass\":true") != std::string::npos);
    std::remove("cli_test_game.txt");
}

TEST_CASE("keyrate: csv format emits one sweep row") {
    CmdResult r = run_cli("keyrate --format csv");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.rfind("n,delta,alpha", 0) == 0);
    CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 2);
}

TEST_CASE("optimize: infeasible search space exits 3") {
    CmdResult r = run_cli("optimize --n 100 --target-security 0.001 --delta-points 2");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("\"feasible\":false") != std::string::npos);
}

TEST_CASE("optimize: feasible search reports the best grid point") {
    CmdResult r = run_cli(
        "optimize --n 1e263 --target-security 2.0 --delta-lo 1e-280 --delta-hi 1e-240 "
        "--delta-points 2 --sweep-csv cli_test_sweep.csv");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.output);
    CHECK(rep["feasible"] == true);
    CHECK(rep["best"].contains("rate"));
    std::string csv = slurp("cli_test_sweep.csv");
    CHECK(csv.rfind("n,delta,alpha", 0) == 0);
    std::remove("cli_test_sweep.csv");
}
