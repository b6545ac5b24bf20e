#include <iostream>

#include "aliasplan/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return aliasplan::run_cli(args, std::cout, std::cerr);
}
