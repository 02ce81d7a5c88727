#include <string>
#include <vector>

#include "dsda/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dsda::run_cli(args);
}
