#include "qiraa/cli.hpp"

int main(int argc, char** argv) { return qiraa::cli::run(argc, argv); }
