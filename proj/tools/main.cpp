#include <iostream>

#include "impc/cli.hpp"

int main(int argc, char** argv) {
  return impc::cli::run(argc, argv, std::cout, std::cerr);
}
