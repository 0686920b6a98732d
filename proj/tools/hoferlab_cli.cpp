#include "hoferlab/cli/scenario.hpp"

int main(int argc, char** argv) { return hoferlab::cli::run_cli(argc, argv); }
