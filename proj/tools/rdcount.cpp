#include "rdcount/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return rdcount::run_cli(argc, argv, std::cout, std::cerr);
}
