#include <iostream>

#include "wmagin/cli.hpp"

int main(int argc, char** argv) {
    return wmagin::cli_main(argc, argv, std::cout, std::cerr);
}
