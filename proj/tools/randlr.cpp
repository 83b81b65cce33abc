#include "randlr/cli.hpp"

int main(int argc, char** argv) { return randlr::cli::run(argc, argv); }
