#include "beamlab/cli.hpp"

int main(int argc, char** argv) { return beamlab::cli::dispatch(argc, argv); }
