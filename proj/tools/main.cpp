#include "commands.hpp"

int main(int argc, char** argv) { return emdot::cli::run_cli(argc, argv); }
