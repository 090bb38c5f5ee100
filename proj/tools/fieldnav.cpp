#include <iostream>

#include "fieldnav/cli.hpp"

int main(int argc, char** argv) { return fieldnav::run_cli(argc, argv, std::cout, std::cerr); }
