#include <iostream>

#include "urlsentry/cli.hpp"

int main(int argc, char** argv) { return urlsentry::run_cli(argc, argv, std::cout, std::cerr); }
