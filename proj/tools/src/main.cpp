#include "segfuse/cli/cli.hpp"

int main(int argc, char** argv) { return segfuse::cli::run(argc, argv); }
