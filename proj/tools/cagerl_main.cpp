#include <iostream>

#include "cagerl/cli.hpp"

int main(int argc, char** argv) { return cagerl::cli::run(argc, argv, std::cout, std::cerr); }
