#include <iostream>

#include "cpr/cli.hpp"

int main(int argc, char** argv) { return cpr::cli::run(argc, argv, std::cout, std::cerr); }
