#include <iostream>

#include "dagnet/cli.hpp"

int main(int argc, char** argv) { return dagnet::run_cli(argc, argv, std::cout, std::cerr); }
