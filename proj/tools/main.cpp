#include "hdvb/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hdvb::cli::run_cli(argc, argv, std::cout, std::cerr); }
