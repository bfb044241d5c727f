#include <iostream>

#include "relight_app/cli.hpp"

int main(int argc, char** argv) {
  return relight::app::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
