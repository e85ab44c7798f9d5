#include <iostream>
#include <string>
#include <vector>

#include "lockcouple/cli.hpp"

int main(int argc, char** argv) {
  return lockcouple::cli::main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
