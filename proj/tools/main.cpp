#include "cli.hpp"

int main(int argc, char** argv) { return kdvlab::cli::cli_entry(argc, argv); }
