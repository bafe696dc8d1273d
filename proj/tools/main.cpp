#include <iostream>
#include <string>
#include <vector>

#include "patchsis/io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return patchsis::run_cli(args, std::cout, std::cerr);
}
