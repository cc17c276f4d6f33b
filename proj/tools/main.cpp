#include "smoothstep/cli.hpp"

int main(int argc, char** argv) { return smoothstep::cli_main(argc, argv); }
