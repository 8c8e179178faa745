#include <iostream>

#include "vshb/cli.hpp"

int main(int argc, char** argv) { return vshb::cli::run(argc, argv, std::cout, std::cerr); }
