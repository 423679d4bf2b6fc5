#include <iostream>

#include "dgnpp/cli.hpp"

int main(int argc, char** argv) { return dgnpp::run_cli(argc, argv, std::cout, std::cerr); }
