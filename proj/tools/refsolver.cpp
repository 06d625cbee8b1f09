#include <iostream>

#include <CLI11.hpp>

#include "smtlog/refsolver.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Brute-force SMT-LIB solver over a bounded fragment"};
    smtlog::refsolver::Options opts;
    app.add_option("--bound", opts.bound, "Int search interval half-width");
    app.add_option("--sleep-ms", opts.sleep_ms, "delay before each check response");
    app.add_option("--die-after", opts.die_after,
                   "exit abruptly after this many commands");
    bool lenient = false;
    app.add_flag("--lenient-logics", lenient, "accept any set-logic argument");
    CLI11_PARSE(app, argc, argv);
    opts.strict_logics = !lenient;
    return smtlog::refsolver::run(std::cin, std::cout, opts);
}
