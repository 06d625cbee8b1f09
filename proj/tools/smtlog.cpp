#include "smtlog/cli.hpp"

int main(int argc, char** argv) { return smtlog::cli::cli_main(argc, argv); }
