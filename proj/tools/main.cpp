#include <csignal>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::signal(SIGINT, hyperttsv::cli::on_sigint);
  std::ios::sync_with_stdio(false);
  return hyperttsv::cli::run(argc, argv, std::cout, std::cerr);
}
