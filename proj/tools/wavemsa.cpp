#include "wavemsa/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wavemsa::run_cli(argc, argv, std::cout, std::cerr); }
