#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return eegintent::run_cli(argc, argv, std::cout, std::cerr); }
