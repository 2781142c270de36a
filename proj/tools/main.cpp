#include "stormlevels/app.hpp"

int main(int argc, char** argv) { return stormlevels::app::cli_main(argc, argv); }
