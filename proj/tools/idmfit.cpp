#include "idmfit/cli.hpp"

int main(int argc, char** argv) { return idmfit::cli::run(argc, argv); }
