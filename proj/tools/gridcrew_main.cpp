#include "gridcrew/cli.hpp"

int main(int argc, char** argv) { return gridcrew::run_cli(argc, argv); }
