#include "app.hpp"

int main(int argc, char** argv) { return covex::cli::run_cli(argc, argv); }
