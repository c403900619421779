#include <iostream>
#include <string>
#include <vector>

#include "eclgsr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return eclgsr::run_cli(args, std::cout, std::cerr);
}
