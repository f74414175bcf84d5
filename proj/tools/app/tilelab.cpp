#include "tilelab_cli/cli.hpp"

int main(int argc, char** argv) { return tilelab::cli::main_entry(argc, argv); }
