#include "lulc/pipeline/cli.hpp"

int main(int argc, char** argv) { return lulc::pipeline::run_cli(argc, argv); }
