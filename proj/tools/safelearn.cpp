#include "safelearn/cli.hpp"

int main(int argc, char** argv) { return safelearn::run_cli(argc, argv); }
