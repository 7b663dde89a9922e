#include "hsreg/cli.hpp"

int main(int argc, char** argv) { return hsreg::cli::run(argc, argv); }
