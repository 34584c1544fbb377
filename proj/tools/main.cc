#include "cli.h"

int main(int argc, char** argv) { return cws::cli::run(argc, argv); }
