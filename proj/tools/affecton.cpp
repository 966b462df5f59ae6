#include "affecton/cli.hpp"

int main(int argc, char** argv) { return affecton::cli::run(argc, argv); }
