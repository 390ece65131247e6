#include "tinstitch/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return tinstitch::cli_main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
