#include "modecomb/cli.hpp"

int main(int argc, char** argv) { return modecomb::run_cli(argc, argv); }
