#include "t3s/cli.hpp"

int main(int argc, char** argv) { return t3s::dispatch(argc, argv); }
