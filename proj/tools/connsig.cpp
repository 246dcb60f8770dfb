#include <string>
#include <vector>

#include "connsig/cli.hpp"

int main(int argc, char** argv) {
  return connsig::cli::run(std::vector<std::string>(argv, argv + argc));
}
