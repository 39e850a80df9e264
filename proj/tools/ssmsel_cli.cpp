#include <iostream>

#include "ssmsel/cli.hpp"

int main(int argc, char** argv) { return ssmsel::cli::main(argc, argv, std::cout, std::cerr); }
