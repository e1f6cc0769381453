#include "gatenet/cli/commands.hpp"

int main(int argc, char** argv) { return gatenet::cli::run(argc, argv); }
