#include "evoopt/harness/commands.hpp"

int main(int argc, char** argv) { return evoopt::harness::run_cli(argc, argv); }
