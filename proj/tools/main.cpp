#include <iostream>

#include "lyam/cli.hpp"

int main(int argc, char** argv) { return lyam::cli::run(argc, argv, std::cout, std::cerr); }
