#include <vector>

#include "adaptlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return adaptlab::run_cli(args);
}
