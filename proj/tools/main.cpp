#include "dualhead/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dualhead::run_cli(argc, argv, std::cout, std::cerr); }
