#include "rulgn/cli.hpp"

int main(int argc, char** argv) { return rulgn::cli_main(argc, argv); }
