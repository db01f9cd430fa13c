#include "bonnet/cli.hpp"

int main(int argc, char** argv) { return bonnet::cli::run(argc, argv); }
