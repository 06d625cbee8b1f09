#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "smtlog/cli.hpp"
#include "support.hpp"

using smtlog::cli::cli_main;

namespace {

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"smtlog"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("bench happy path writes a CSV and exits 0") {
    std::string csv = "/tmp/smtlog_cli_bench.csv";
    std::remove(csv.c_str());
    int code = run_cli({"bench", "--nodes", "10", "--seed", "1", "--strategy", "csa",
                        "--order", "dfs", "--reference-backend", "--max-path-len",
                        "4", "--csv", csv});
    REQUIRE(code == 0);
    auto rows = smtlog::bench::parse_csv(slurp(csv));
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].strategy == smtlog::Strategy::CSA);
    REQUIRE(rows[0].checks > 0);
}

TEST_CASE("unknown flags are usage errors (exit 1)") {
    REQUIRE(run_cli({"bench", "--no-such-flag"}) == 1);
    REQUIRE(run_cli({"frobnicate"}) == 1);
    REQUIRE(run_cli({}) == 1);
}

TEST_CASE("a dead solver command is an environment failure (exit 2)") {
    std::string prog = "/tmp/smtlog_cli_prog.dl";
    {
        std::ofstream out(prog);
        out << "rel e(int, int).\nrel p(int, int).\np(X, Y) :- e(X, Y).\ne(1, 2).\n";
    }
    REQUIRE(run_cli({"run", prog, "--solver-cmd", "/bin/false"}) == 2);
    REQUIRE(run_cli({"run", prog, "--solver-cmd", "/nonexistent/solver"}) == 2);
    REQUIRE(run_cli({"bench", "--nodes", "6"}) == 2); // no solver configured
}

TEST_CASE("gen output feeds run directly") {
    std::string prog = "/tmp/smtlog_cli_gen.dl";
    REQUIRE(run_cli({"gen", "--seed", "3", "--nodes", "8", "--avg-out-degree", "1.5",
                     "--max-path-len", "4", "-o", prog}) == 0);
    REQUIRE(run_cli({"run", prog, "--reference-backend", "--strategy", "pp"}) == 0);
    REQUIRE(run_cli({"run", prog, "--reference-backend", "--strategy", "csa",
                     "--workers", "3"}) == 0);
}

TEST_CASE("gen is deterministic across invocations") {
    std::string a = "/tmp/smtlog_cli_gen_a.dl", b = "/tmp/smtlog_cli_gen_b.dl";
    REQUIRE(run_cli({"gen", "--seed", "9", "--nodes", "10", "-o", a}) == 0);
    REQUIRE(run_cli({"gen", "--seed", "9", "--nodes", "10", "-o", b}) == 0);
    REQUIRE(slurp(a) == slurp(b));
}

TEST_CASE("run against the refsolver subprocess") {
    std::string prog = "/tmp/smtlog_cli_refsolver.dl";
    REQUIRE(run_cli({"gen", "--seed", "4", "--nodes", "8", "--max-path-len", "3",
                     "-o", prog}) == 0);
    REQUIRE(run_cli({"run", prog, "--solver-cmd", testsupport::refsolver_path(),
                     "--logic", "ALL", "--strategy", "csa"}) == 0);
}

TEST_CASE("malformed program files are environment failures") {
    std::string prog = "/tmp/smtlog_cli_bad.dl";
    {
        std::ofstream out(prog);
        out << "rel p(int).\np(X) :- q(X).\n";
    }
    REQUIRE(run_cli({"run", prog, "--reference-backend"}) == 2);
    REQUIRE(run_cli({"run", "/nonexistent.dl", "--reference-backend"}) == 2);
}
