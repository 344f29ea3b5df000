#include <factseq/cli.hpp>

int main(int argc, char** argv) { return factseq::cli::run(argc, argv); }
