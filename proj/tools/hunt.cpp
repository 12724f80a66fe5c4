#include <iostream>

#include "hunt/cli.hpp"

int main(int argc, char** argv) { return hunt::run_cli(argc, argv, std::cout, std::cerr); }
