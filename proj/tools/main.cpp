#include "commands.hpp"

int main(int argc, char** argv) { return eqforge::cli::run_cli(argc, argv); }
