#include <iostream>

#include "sttgcn/cli.hpp"

int main(int argc, char** argv) { return sttgcn::run_cli(argc, argv, std::cout, std::cerr); }
