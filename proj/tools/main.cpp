#include <iostream>

#include "equi/cli.hpp"

int main(int argc, char** argv) { return equi::run_cli(argc, argv, std::cout, std::cerr); }
