#include "emnh/cli/commands.hpp"

int main(int argc, char** argv) { return emnh::cli::run_cli(argc, argv); }
