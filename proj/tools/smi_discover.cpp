#include <iostream>

#include "smi/cli.hpp"

int main(int argc, char** argv) { return smi::cli_main(argc, argv, std::cout, std::cerr); }
