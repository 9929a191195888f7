#include <iostream>

#include "adforge/cli.h"

int main(int argc, char **argv) { return adforge::RunCli({argv, argv + argc}, std::cout, std::cerr); }
