#include "ringsim/harness.hpp"

int main(int argc, char **argv) { return ringsim::cli_main(argc, argv); }
