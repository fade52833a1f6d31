#include "jpm/cli.hpp"

int main(int argc, char** argv) { return jpm::run_cli(argc, argv); }
