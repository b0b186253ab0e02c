#include "commands.hpp"

int main(int argc, char** argv) { return dvauth::cli::run(argc, argv); }
