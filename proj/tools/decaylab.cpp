#include <iostream>

#include "decaylab/cli.hpp"

int main(int argc, char** argv) { return decaylab::run_cli(argc, argv, std::cout, std::cerr); }
