#include <iostream>

#include "sthcm/cli.hpp"

int main(int argc, char** argv) { return sthcm::run_cli(argc, argv, std::cout, std::cerr); }
