#include "efdls/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return efdls::run_cli(argc, argv, std::cout, std::cerr); }
