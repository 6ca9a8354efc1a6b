#include <string>
#include <vector>

#include "confsel/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return confsel::cli_main(args);
}
