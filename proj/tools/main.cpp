#include "commands.hpp"

int main(int argc, char** argv) { return skillscale::cli::run(argc, argv); }
