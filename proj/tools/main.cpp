#include <iostream>

#include "flowph/cli.hpp"

int main(int argc, char** argv) { return flowph::cli::run(argc, argv, std::cout, std::cerr); }
