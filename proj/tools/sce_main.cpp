#include "sce/cli.hpp"

int main(int argc, char** argv) {
    return sce::run_cli(argc, argv);
}
