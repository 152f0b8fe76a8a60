#include <iostream>
#include <string>
#include <vector>

#include "hlsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hlsim::run_cli(args, std::cout, std::cerr);
}
