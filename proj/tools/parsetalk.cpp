#include <iostream>

#include "parsetalk/cli.hpp"

int main(int argc, char** argv) {
  return parsetalk::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
