#include "cli.hpp"

int main(int argc, char** argv) {
    return critlab::cli::run(argc, argv);
}
