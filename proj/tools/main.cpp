#include <iostream>
#include <string>
#include <vector>

#include "predvar/cli.hpp"

int main(int argc, char** argv) {
  return predvar::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
