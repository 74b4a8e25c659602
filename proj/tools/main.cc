#include "tfe/cli.h"

int main(int argc, char** argv) { return tfe::run_cli(argc, argv); }
