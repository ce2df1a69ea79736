#include "xva/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return xva::cli::run(argc, argv, std::cout, std::cerr);
}
