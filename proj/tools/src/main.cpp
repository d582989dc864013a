#include <iostream>
#include <string>
#include <vector>

#include "lrvb_cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lrvb::cli::run(args, std::cout, std::cerr);
}
