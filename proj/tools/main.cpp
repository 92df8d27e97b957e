#include <string>
#include <vector>

#include "explearn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return explearn::cli::run(args);
}
