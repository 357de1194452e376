#include <iostream>

#include "atomscan/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return atomscan::cli::run(args, std::cout, std::cerr);
}
