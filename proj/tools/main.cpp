#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gfsi::cli::run(argc, argv, std::cout, std::cerr); }
