#include "ppjudge/cli.hpp"

int main(int argc, char** argv) { return ppjudge::run_cli(argc, argv); }
