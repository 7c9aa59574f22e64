#include <iostream>

#include "mvad/cli.hpp"

int main(int argc, char** argv) { return mvad::cli::cli_main(argc, argv, std::cout, std::cerr); }
