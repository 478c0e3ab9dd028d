#include "fractalnet/cli/app.hpp"

int main(int argc, char** argv) { return fractalnet::cli::run(argc, argv); }
