#include "cmk/cli.hpp"

int main(int argc, char** argv) { return cmk::run_cli(argc, argv); }
