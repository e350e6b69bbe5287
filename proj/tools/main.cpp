#include "gscope/cli.hpp"

int main(int argc, char** argv) { return gscope::cli::main(argc, argv); }
