#include "geob/harness.hpp"

int main(int argc, char** argv) { return geob::cli(argc, argv); }
