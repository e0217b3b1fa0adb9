#include "kerman/cli.hpp"

int main(int argc, char** argv) { return kerman::cli::run(argc, argv); }
