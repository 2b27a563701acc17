#include <iostream>

#include "ordmed/cli.hpp"

int main(int argc, char** argv) { return ordmed::cli::run(argc, argv, std::cerr); }
