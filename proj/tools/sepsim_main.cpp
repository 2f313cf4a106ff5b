#include "sepsim/cli.hpp"

int main(int argc, char** argv) { return sep::cli::run_main(argc, argv); }
