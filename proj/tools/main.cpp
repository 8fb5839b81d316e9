#include "chainrisk/cli.hpp"

int main(int argc, char** argv) { return chainrisk::cli_main(argc, argv); }
