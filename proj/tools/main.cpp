#include "cssmpc/cli.hpp"

int main(int argc, char** argv) { return cssmpc::cli::run_cli(argc, argv); }
