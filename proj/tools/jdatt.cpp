#include "jdatt/cli.hpp"

int main(int argc, char** argv) { return jdatt::cli::run(argc, argv); }
