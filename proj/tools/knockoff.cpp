#include <string>
#include <vector>

#include "knockoffs/cli.hpp"

int main(int argc, char** argv) {
  return knockoffs::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
