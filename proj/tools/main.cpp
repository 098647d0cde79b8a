#include "cli.hpp"

int main(int argc, char** argv) { return jpcw::cli::run_cli(argc, argv); }
