#include <iostream>

#include "mcbet/cli.hpp"

int main(int argc, char** argv) { return mcbet::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
