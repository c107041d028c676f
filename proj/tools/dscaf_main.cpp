#include "dscaf/commands.hpp"

int main(int argc, char** argv) { return dscaf::run_cli(argc, argv); }
