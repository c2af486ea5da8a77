#include "sdflow/cli.hpp"

int main(int argc, char** argv) { return sdflow::cli_main(argc, argv); }
