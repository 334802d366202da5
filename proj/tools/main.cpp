#include "nvdesign/cli.hpp"

int main(int argc, char** argv) { return nvdesign::cli::run(argc, argv); }
