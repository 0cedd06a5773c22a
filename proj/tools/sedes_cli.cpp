#include <iostream>

#include "sedes/run.hpp"

int main(int argc, char** argv) {
    return sedes::run_cli(argc, argv, std::cout, std::cerr);
}
