#include <iostream>
#include <string>
#include <vector>

#include "phrasecraft/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return phrasecraft::cli::dispatch(args, std::cout, std::cerr);
}
