#include "xsec/cli.hpp"

int main(int argc, char** argv) { return xsec::cli::main(argc, argv); }
