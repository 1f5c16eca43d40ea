#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return hmmop::cli::cli_dispatch(argc, argv, std::cout, std::cerr); }
