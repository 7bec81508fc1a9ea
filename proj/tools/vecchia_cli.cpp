#include "vecchia/cli.hpp"

int main(int argc, char** argv) { return vecchia::cli::main(argc, argv); }
