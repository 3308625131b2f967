#include <iostream>

#include "g2p/cli/commands.hpp"

int main(int argc, char** argv) { return g2p::cli::run(argc, argv, std::cout, std::cerr); }
