#include <morpde/run.hpp>

int main(int argc, char** argv) { return morpde::run_cli(argc, argv); }
