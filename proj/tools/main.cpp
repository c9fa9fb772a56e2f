#include "mfpce/cli.hpp"

int main(int argc, char** argv) { return mfpce::cli::run(argc, argv); }
