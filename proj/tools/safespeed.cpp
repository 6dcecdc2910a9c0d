#include <iostream>

#include "safespeed/io/cli.hpp"

int main(int argc, char** argv) { return safespeed::io::run_cli(argc, argv, std::cout, std::cerr); }
