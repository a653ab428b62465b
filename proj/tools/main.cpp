#include "chirpctl/cli.hpp"

int main(int argc, char** argv) { return chirpctl::run_cli(argc, argv); }
