#include <iostream>

#include "chronocal/app/commands.hpp"

int main(int argc, char** argv) {
  return chronocal::app::run_cli(argc, argv, std::cout, std::cerr);
}
