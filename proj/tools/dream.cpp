#include <iostream>

#include "dream/cli.hpp"

int main(int argc, char** argv) { return dream::cli::run(argc, argv, std::cout, std::cerr); }
