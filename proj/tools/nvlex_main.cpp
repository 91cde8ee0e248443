#include "nvlex/cli.hpp"

int main(int argc, char** argv) { return nvlex::cli::run(argc, argv); }
