#include "decap/cli.hpp"

int main(int argc, char** argv) { return decap::run_cli(argc, argv); }
