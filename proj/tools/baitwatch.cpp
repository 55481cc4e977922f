#include <iostream>

#include "baitwatch/cli.hpp"

int main(int argc, char** argv) { return baitwatch::cli::run(argc, argv, std::cout, std::cerr); }
