#include <iostream>
#include <string>
#include <vector>

#include "qg/io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qg::cli_run(args, std::cout, std::cerr);
}
