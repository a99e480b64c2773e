#include <iostream>

#include "qperc/cli.hpp"

int main(int argc, char** argv) { return qperc::cli::run(argc, argv, std::cout, std::cerr); }
