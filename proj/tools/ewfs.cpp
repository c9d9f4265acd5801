#include "ewfs/cli.hpp"

int main(int argc, char** argv) { return ewfs::cli::run_cli(argc, argv); }
