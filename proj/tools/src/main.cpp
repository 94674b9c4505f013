#include "dalab_cli/cli.hpp"

int main(int argc, char** argv) { return dalab::cli::main_entry(argc, argv); }
