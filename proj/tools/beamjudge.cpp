#include "beamjudge/cli.hpp"

int main(int argc, char** argv) { return beamjudge::cli::dispatch(argc, argv); }
