#include <iostream>

#include "wmqkd/cli.hpp"

int main(int argc, char** argv) { return wmqkd::cli_main(argc, argv, std::cout, std::cerr); }
