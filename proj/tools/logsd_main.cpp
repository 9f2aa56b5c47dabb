#include <iostream>

#include "logsd/cli.hpp"

int main(int argc, char** argv) { return logsd::cli::run_cli(argc, argv, std::cout, std::cerr); }
