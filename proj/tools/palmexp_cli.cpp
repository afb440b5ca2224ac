#include <iostream>
#include <string>
#include <vector>

#include "palmexp/cli.hpp"

int main(int argc, char** argv) {
    return palmexp::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
