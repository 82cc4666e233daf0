#include <iostream>

#include "treeclone/cli.hpp"

int main(int argc, char** argv) { return treeclone::cli::run(argc, argv, std::cout, std::cerr); }
