#include "poolal/cli.hpp"

int main(int argc, char** argv) { return poolal::cli_main(argc, argv); }
