#include <iostream>

#include "mmrec/cli.hpp"

int main(int argc, char** argv) {
  return mmrec::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
