#include "seqot/commands.hpp"

int main(int argc, char** argv) { return seqot::run_cli(argc, argv); }
