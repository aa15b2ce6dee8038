// SPDX-License-Identifier: Apache-2.0
#include "kgqa/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return kgqa::run_cli(argc, argv, std::cout, std::cerr);
}
