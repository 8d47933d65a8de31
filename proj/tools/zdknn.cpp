#include <iostream>

#include "zdtree/cli/commands.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return zdtree::cli::run_cli(argc, argv, std::cout, std::cerr);
}
