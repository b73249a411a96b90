#include "cli.hpp"

int main(int argc, char** argv) { return tablink::cli::run(argc, argv); }
