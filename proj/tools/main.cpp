#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  return dsym::cli::run_cli(std::vector<std::string>(argv, argv + argc));
}
