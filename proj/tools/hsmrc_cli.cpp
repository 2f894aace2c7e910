#include "hsmrc/cli.hpp"

int main(int argc, char** argv) { return hsmrc::cli::run(argc, argv); }
