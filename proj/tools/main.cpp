#include "sfca/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sfca::cli(argc, argv, std::cout, std::cerr); }
