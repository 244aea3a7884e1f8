#include <iostream>

#include "entrain/cli.hpp"

int main(int argc, char** argv) {
    return entrain::cli::run(argc, argv, std::cout, std::cerr);
}
