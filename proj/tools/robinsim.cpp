#include <iostream>
#include <string>
#include <vector>

#include "robinsim/harness.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return robinsim::run_cli(args, std::cout, std::cerr);
}
