#include <iostream>

#include "dhmgen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dhmgen::cli::run(args, std::cout, std::cerr);
}
