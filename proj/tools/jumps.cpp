#include "jumps/cli/dispatch.hpp"

int main(int argc, char** argv) { return jumps::dispatch(argc, argv); }
