#include "tsvstress/cli.hpp"

int main(int argc, char** argv) { return tsvstress::cli::run(argc, argv); }
