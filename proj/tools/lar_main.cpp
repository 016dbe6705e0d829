#include <iostream>

#include "lar/cli.hpp"

int main(int argc, char** argv) { return lar::run_cli(argc, argv, std::cout, std::cerr); }
