#include <iostream>
#include <string>
#include <vector>

#include "silm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return silm::run_cli(args, std::cout, std::cerr);
}
