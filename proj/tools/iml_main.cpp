#include "iml/cli.hpp"

int main(int argc, char** argv) { return iml::run_cli(argc, argv); }
