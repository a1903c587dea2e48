#include "partfuse/cli.hpp"

int main(int argc, char** argv) { return partfuse::run_cli(argc, argv); }
