#include "lpdist/cli.hpp"

int main(int argc, char** argv) { return lpdist::run(argc, argv); }
