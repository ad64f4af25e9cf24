#include <iostream>

#include "qhydro/cli.hpp"

int main(int argc, char** argv) { return qhydro::run_cli(argc, argv, std::cout, std::cerr); }
