#include "exitfem/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return exitfem::run_cli(argc, argv, std::cout, std::cerr); }
