#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return proxsense::cli::run({argv, argv + argc}, std::cout, std::cerr);
}
