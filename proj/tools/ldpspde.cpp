#include "ldpspde/cli.hpp"

int main(int argc, char** argv) { return ldp::cli_main(argc, argv); }
