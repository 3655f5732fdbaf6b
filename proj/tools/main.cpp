#include <iostream>

#include "polyspec/cli.hpp"

int main(int argc, char** argv) { return polyspec::run_cli(argc, argv, std::cout, std::cerr); }
