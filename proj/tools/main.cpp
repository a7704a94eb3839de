#include "app.hpp"

int main(int argc, char** argv) { return madopt::app::run_cli(argc, argv); }
