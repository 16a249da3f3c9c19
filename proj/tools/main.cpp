#include "tomoplan/cli.hpp"

int main(int argc, char** argv) { return tomoplan::run_cli(argc, argv); }
