#include <iostream>

#include "fgan/cli/cli.hpp"

int main(int argc, char** argv) { return fgan::cli::run(argc, argv, std::cout, std::cerr); }
