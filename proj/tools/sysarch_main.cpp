#include <iostream>

#include "sysarch/cli.hpp"

int main(int argc, char** argv)
{
    return sysarch::run_cli(argc, argv, std::cout, std::cerr);
}
