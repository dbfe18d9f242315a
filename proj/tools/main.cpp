#include <iostream>

#include "diffnet/cli.hpp"

int main(int argc, char** argv) {
  return diffnet::run_cli(argc, argv, std::cout, std::cerr);
}
