#include "dsn/experiment.hpp"

int main(int argc, char** argv) { return dsn::run_cli(argc, argv); }
