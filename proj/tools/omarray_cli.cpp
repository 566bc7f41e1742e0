#include <omarray/cli.hpp>

int main(int argc, char **argv) { return omarray::cli::dispatch(argc, argv); }
