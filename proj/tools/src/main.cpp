#include <iostream>

#include "tierbench/cli.hpp"

int main(int argc, char** argv) { return tierbench::cli::run(argc, argv, std::cout, std::cerr); }
