#include <vector>

#include "lutloc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lutloc::cli_dispatch(args);
}
