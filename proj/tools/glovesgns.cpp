#include "glovesgns/cli.hpp"

int main(int argc, char** argv) { return glovesgns::cli::run(argc, argv); }
