#include "rkhs_lab/cli.hpp"

int main(int argc, char** argv) { return rkhs_lab::cli::run(argc, argv); }
