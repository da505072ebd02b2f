#include "pb/cli.hpp"

int main(int argc, char** argv) { return pb::cli::run_main(argc, argv); }
