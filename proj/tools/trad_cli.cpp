#include "trad/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return trad::cli::run_cli(argc, argv, std::cout, std::cerr); }
